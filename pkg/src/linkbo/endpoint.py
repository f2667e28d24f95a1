"""Behavioral LinkBo device: transmitter FSM, receiver FSM, LBDET, top FSM.

A device is driven one tick per cycle of its own clock.  Each tick it
samples the bus level and returns the open-drain drive it wants for the
next cycle.  The receiver oversamples at clock-cycle granularity and
measures the sync pulse with the prescaler count, exactly as the
slot-per-prescaler-division timing implies.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field, replace

from .channel import DriveState, EdgeDirection, LineLevel, LineTrace
from .coding import crc4_check, decode_slot, Edge, extract_edges
from .framing import (FrameError, FramePlan, half_slot_levels, Message,
                      MessageKind, bits_to_byte, parse_body, plan_frame)


class AckOutcome(enum.Enum):
    ACK_RECEIVED = "ack_received"
    NO_ACK = "no_ack"


class Outcome(enum.Enum):
    DELIVERED = "delivered"
    CRC_REJECTED = "crc_rejected"
    PREEMPTED = "preempted"
    ARBITRATION_LOST = "arbitration_lost"
    SYNC_FAILED = "sync_failed"


@dataclass(frozen=True)
class DeviceConfig:
    name: str
    nominal_frequency: float = 3e6
    offset_fraction: float = 0.0
    phase_offset: int = 0
    clock_period_ps: int | None = None  # overrides nominal_frequency if set
    psc_division: int = 10
    address: int | None = None
    lbdet_threshold_slots: float = 1.0
    hp_classify_slots: float = 1.0  # sync low longer than this => HP frame
    decode_tolerance: float = 0.25
    retry_limit: int = 8
    backoff_idle_slots: int = 2
    sync_timeout_slots: float = 4.0
    slot_est_clamp: float = 0.05  # fall back to nominal beyond this deviation

    def __post_init__(self) -> None:
        if self.psc_division % 2 or self.psc_division <= 0:
            raise ValueError("psc_division must be a positive even integer")


@dataclass(frozen=True)
class TransmissionReport:
    message: Message
    device: str
    attempt: int
    start_ps: int
    end_ps: int
    bits_total: int
    bits_payload: int
    bits_received: int
    ack: AckOutcome
    outcome: Outcome

    @property
    def duration_ps(self) -> int:
        return self.end_ps - self.start_ps


@dataclass(frozen=True)
class RxFrameRecord:
    device: str
    start_ps: int
    end_ps: int
    kind: MessageKind | None
    bits_received: int
    crc_ok: bool
    delivered: bool
    message: Message | None
    error: str | None


class Device:
    """One LinkBo endpoint; tick with the sampled level on every clock edge."""

    def __init__(self, config: DeviceConfig) -> None:
        self.config = config
        self.psc = config.psc_division
        self.half = self.psc // 2
        self._lbdet_cycles = config.lbdet_threshold_slots * self.psc
        self._classify_cycles = round(config.hp_classify_slots * self.psc)
        self._tolerance = config.decode_tolerance

        self.k = -1  # cycle counter
        self.prev_level = LineLevel.HIGH
        self.high_run = 10**9  # bus idles high before boot
        self.lbdet_count = 0
        self.lbdet_flag = False
        self.last_fall_k = -(10**9)
        self.last_fall_ps = 0

        self.queue: deque[tuple[Message, int]] = deque()
        self.tx_active = False
        self._tx: dict = {}

        self.rx_state = "idle"
        self._rx: dict = {}

        self.selected_address: int | None = None
        self.received: list[Message] = []
        self.reports: list[TransmissionReport] = []
        self.rx_frames: list[RxFrameRecord] = []

    # ------------------------------------------------------------- public API

    def submit(self, msg: Message) -> bool:
        """Queue a message.  LP/ADDR while busy is refused; HP preempts LP."""
        if msg.kind is not MessageKind.HP:
            if self.tx_active or self.queue:
                return False
            self.queue.append((msg, 1))
            return True
        if self.tx_active and self._tx["msg"].kind is not MessageKind.HP:
            preempted = self._tx["msg"]
            attempt = self._tx["attempt"]
            self._finish_tx(Outcome.PREEMPTED, AckOutcome.NO_ACK)
            self.queue.appendleft((preempted, attempt + 1))
        self.queue.appendleft((msg, 1))
        return True

    def tick(self, level: LineLevel, t_ps: int) -> DriveState:
        self.k += 1
        if level is LineLevel.LOW:
            self.lbdet_count += 1
            self.high_run = 0
        else:
            self.lbdet_count = 0
            self.high_run += 1
        self.lbdet_flag = self.lbdet_count > self._lbdet_cycles
        if self.prev_level is LineLevel.HIGH and level is LineLevel.LOW:
            self.last_fall_k = self.k
            self.last_fall_ps = t_ps

        if not self.tx_active:
            self._maybe_start_tx()
        if self.tx_active:
            drive = self._tx_tick(level, t_ps)
        else:
            drive = self._rx_tick(level, t_ps)
        self.prev_level = level
        return drive

    # ------------------------------------------------------- transmitter side

    def _maybe_start_tx(self) -> None:
        if not self.queue:
            return
        msg, attempt = self.queue[0]
        if msg.kind is not MessageKind.HP:
            if self.rx_state != "idle":
                return
            if self.high_run < self.config.backoff_idle_slots * self.psc:
                return
        self.queue.popleft()
        if self.rx_state != "idle":
            self._record_rx_frame(error="preempted_by_tx")
            self.rx_state = "idle"
        plan = plan_frame(msg)
        halves = half_slot_levels(plan)
        self.tx_active = True
        self._tx = {
            "msg": msg,
            "attempt": attempt,
            "plan": plan,
            "halves": halves,
            "body_limit": 2 * (plan.total_slots - 1),
            "phase": "wait",
            "half_idx": 0,
            "cyc": 0,
            "start_ps": 0,
            "start_k": 0,
            "frame_end_ps": None,
        }

    def _tx_tick(self, level: LineLevel, t_ps: int) -> DriveState:
        tx = self._tx
        if tx["phase"] == "wait":
            if self.k % self.psc != 0:
                return DriveState.RELEASE
            tx["phase"] = "drive"
            tx["start_ps"] = t_ps
            tx["start_k"] = self.k

        if tx["phase"] == "drive":
            intended = tx["halves"][tx["half_idx"]]
            # Arbitration: conflicts are judged at the end of a released
            # half-slot, giving the line a full half to rise.
            if (intended is LineLevel.HIGH and level is LineLevel.LOW
                    and tx["cyc"] == self.half - 1
                    and tx["half_idx"] < tx["body_limit"]):
                tx["phase"] = "suspect"
                return DriveState.RELEASE
            drive = (DriveState.DRIVE_LOW if intended is LineLevel.LOW
                     else DriveState.RELEASE)
            tx["cyc"] += 1
            if tx["cyc"] == self.half:
                tx["cyc"] = 0
                tx["half_idx"] += 1
                if tx["half_idx"] == tx["body_limit"]:
                    tx["phase"] = "ack"
                    tx["ack_detect_from"] = self.k + 2
                    tx["ack_window_end"] = self.k + round(1.5 * self.psc)
                    tx["frame_end_k"] = tx["start_k"] + tx["plan"].total_slots * self.psc
                    tx["saw_low"] = False
                    tx["got_rise"] = False
            return drive

        if tx["phase"] == "suspect":
            if self.lbdet_flag and tx["msg"].kind is not MessageKind.HP:
                msg, attempt = tx["msg"], tx["attempt"]
                self._finish_tx(Outcome.PREEMPTED, AckOutcome.NO_ACK)
                self.queue.appendleft((msg, attempt + 1))
                self._adopt_ongoing_low()
            elif level is LineLevel.HIGH:
                msg, attempt = tx["msg"], tx["attempt"]
                self._finish_tx(Outcome.ARBITRATION_LOST, AckOutcome.NO_ACK)
                if attempt < self.config.retry_limit:
                    self.queue.append((msg, attempt + 1))
            return DriveState.RELEASE

        # phase == "ack"
        if self.k >= tx["ack_detect_from"]:
            if level is LineLevel.LOW:
                tx["saw_low"] = True
            elif tx["saw_low"]:
                tx["got_rise"] = True
        if tx["frame_end_ps"] is None and self.k >= tx["frame_end_k"]:
            tx["frame_end_ps"] = t_ps
        if self.k >= tx["ack_window_end"]:
            if tx["got_rise"]:
                self._finish_tx(Outcome.DELIVERED, AckOutcome.ACK_RECEIVED)
            else:
                self._finish_tx(Outcome.CRC_REJECTED, AckOutcome.NO_ACK)
        return DriveState.RELEASE

    def _finish_tx(self, outcome: Outcome, ack: AckOutcome) -> None:
        tx = self._tx
        plan: FramePlan = tx["plan"]
        start = tx["start_ps"] if tx["phase"] != "wait" else self.last_fall_ps
        end = tx.get("frame_end_ps") or self.last_fall_ps
        if outcome is Outcome.DELIVERED or outcome is Outcome.CRC_REJECTED:
            end = tx["frame_end_ps"] if tx["frame_end_ps"] is not None else end
        self.reports.append(TransmissionReport(
            message=tx["msg"],
            device=self.config.name,
            attempt=tx["attempt"],
            start_ps=start,
            end_ps=max(end, start),
            bits_total=plan.total_slots,
            bits_payload=8 * len(tx["msg"].payload_bytes),
            bits_received=0,  # filled in by the network from RX records
            ack=ack,
            outcome=outcome,
        ))
        self.tx_active = False
        self._tx = {}

    # ---------------------------------------------------------- receiver side

    def _adopt_ongoing_low(self) -> None:
        """Resume sync measurement from the falling edge of the current low run."""
        if (self.prev_level is LineLevel.LOW or self.lbdet_count > 0) and \
                self.k - self.last_fall_k <= self.config.sync_timeout_slots * self.psc:
            self._begin_sync(self.last_fall_k, self.last_fall_ps)
        else:
            self.rx_state = "idle"
            self._rx = {}

    def _begin_sync(self, fall_k: int, fall_ps: int) -> None:
        self.rx_state = "sync"
        self._rx = {
            "fall_k": fall_k,
            "start_ps": fall_ps,
            "rises": 0,
            "bits": [],
            "kind": None,
            "total": None,
        }

    def _rx_tick(self, level: LineLevel, t_ps: int) -> DriveState:
        rx = self._rx
        falling = self.prev_level is LineLevel.HIGH and level is LineLevel.LOW
        rising = self.prev_level is LineLevel.LOW and level is LineLevel.HIGH

        if self.rx_state == "idle":
            if falling:
                self._begin_sync(self.k, t_ps)
            return DriveState.RELEASE

        if self.rx_state == "sync":
            if rising:
                low_dur = self.k - rx["fall_k"]
                if rx["rises"] == 0 and low_dur <= self._classify_cycles:
                    rx["rises"] = 1
                else:
                    count = self.k - rx["fall_k"]
                    kind = (MessageKind.HP if rx["rises"] == 0 else MessageKind.LP)
                    self._finish_sync(kind, count)
            elif self.k - rx["fall_k"] > self.config.sync_timeout_slots * self.psc:
                self._record_rx_frame(error="sync_timeout")
                self.rx_state = "idle"
            return DriveState.RELEASE

        if self.rx_state == "body":
            edge = None
            if rising or falling:
                edge = (self.k, rising)
            if edge is not None:
                self._consider_edge(edge)
            if self.k > rx["expected_mid"] + self._tolerance * rx["slot_est"]:
                if rx["best"] is None:
                    self._record_rx_frame(error="decode")
                    self._adopt_ongoing_low()
                    return DriveState.RELEASE
                best_k, best_rising = rx["best"]
                rx["bits"].append(1 if best_rising else 0)
                rx["expected_mid"] = best_k + rx["slot_est"]
                rx["best"] = None
                if (rx["kind"] is not MessageKind.HP and rx["total"] is None
                        and len(rx["bits"]) == 3):
                    size = bits_to_byte(rx["bits"])
                    n = 1 if size == 0 else size
                    rx["total"] = 3 + 8 * n + 4
                if rx["total"] is not None and len(rx["bits"]) == rx["total"]:
                    self._finish_body(t_ps)
                elif edge is not None:
                    self._consider_edge(edge)
            return DriveState.RELEASE

        # rx_state == "ack"; a filtered frame sits out the ACK slot silently
        # so the addressed device's ACK pulse is not mistaken for a sync
        if rx["ack_start"] <= self.k < rx["ack_mid"] and not rx["filtered"]:
            return DriveState.DRIVE_LOW
        if self.k >= rx["ack_end"]:
            msg: Message = rx["message"]
            if rx["filtered"]:
                self._record_rx_frame(message=msg, crc_ok=True,
                                      error="filtered")
            else:
                if msg.kind is MessageKind.ADDR:
                    self.selected_address = msg.address
                self.received.append(msg)
                self._record_rx_frame(message=msg, crc_ok=True, delivered=True)
            self.rx_state = "idle"
        return DriveState.RELEASE

    def _consider_edge(self, edge: tuple[int, bool]) -> None:
        rx = self._rx
        dist = abs(edge[0] - rx["expected_mid"])
        if dist <= self._tolerance * rx["slot_est"]:
            if rx["best"] is None or dist < abs(rx["best"][0] - rx["expected_mid"]):
                rx["best"] = edge

    def _finish_sync(self, kind: MessageKind, count: int) -> None:
        rx = self._rx
        est = round(count / 1.5)
        if abs(est - self.psc) > self.config.slot_est_clamp * self.psc:
            est = self.psc  # implausible measurement, fall back to nominal
        rx["kind"] = kind
        rx["slot_est"] = est
        rx["expected_mid"] = float(self.k + est)
        rx["best"] = None
        if kind is MessageKind.HP:
            rx["total"] = 12  # 8 payload + 4 CRC
        self.rx_state = "body"

    def _finish_body(self, t_ps: int) -> None:
        rx = self._rx
        bits = rx["bits"]
        if not crc4_check(bits):
            self._record_rx_frame(crc_ok=False, error="crc")
            self.rx_state = "idle"
            return
        try:
            if rx["kind"] is MessageKind.HP:
                msg = parse_body(MessageKind.HP, [], bits[:8])
            else:
                msg = parse_body(MessageKind.LP, bits[:3], bits[3:-4])
        except FrameError:
            self._record_rx_frame(crc_ok=True, error="frame")
            self.rx_state = "idle"
            return
        rx["filtered"] = (msg.kind is not MessageKind.ADDR
                          and self.config.address is not None
                          and self.selected_address is not None
                          and self.selected_address != self.config.address)
        est = rx["slot_est"]
        ack_start = round(rx["expected_mid"] - est / 2)
        rx["ack_start"] = max(ack_start, self.k + 1)
        rx["ack_mid"] = rx["ack_start"] + est // 2
        rx["ack_end"] = rx["ack_start"] + est
        rx["message"] = msg
        self.rx_state = "ack"

    def _record_rx_frame(self, message: Message | None = None,
                         crc_ok: bool = False, delivered: bool = False,
                         error: str | None = None) -> None:
        rx = self._rx
        self.rx_frames.append(RxFrameRecord(
            device=self.config.name,
            start_ps=rx.get("start_ps", 0),
            end_ps=self.last_fall_ps if not delivered else self.last_fall_ps,
            kind=rx.get("kind"),
            bits_received=len(rx.get("bits", [])),
            crc_ok=crc_ok,
            delivered=delivered,
            message=message,
            error=error,
        ))


@dataclass(frozen=True)
class DecodedFrame:
    kind: MessageKind | None
    message: Message | None
    bits: list[int]
    slot_period: float
    error: str | None


def decode_trace(trace: LineTrace, nominal_slot_ps: float,
                 tolerance: float = 0.25,
                 slot_clamp: float = 0.25) -> DecodedFrame:
    """Offline receiver: decode one frame from a recorded digital trace."""
    edges = extract_edges(trace)
    falls = [e for e in edges if e.direction is EdgeDirection.FALLING]
    if not falls:
        return DecodedFrame(None, None, [], 0.0, "no_sync")
    fall = falls[0]
    rises = [e for e in edges
             if e.direction is EdgeDirection.RISING and e.time > fall.time]
    if not rises:
        return DecodedFrame(None, None, [], 0.0, "sync_timeout")
    first_rise = rises[0]
    if first_rise.time - fall.time > nominal_slot_ps:
        kind, classify_rise = MessageKind.HP, first_rise
    else:
        if len(rises) < 2:
            return DecodedFrame(None, None, [], 0.0, "sync_timeout")
        kind, classify_rise = MessageKind.LP, rises[1]
    est = (classify_rise.time - fall.time) / 1.5
    if abs(est - nominal_slot_ps) > slot_clamp * nominal_slot_ps:
        est = float(nominal_slot_ps)
    bits: list[int] = []
    slot_start = classify_rise.time + est / 2.0
    total = 12 if kind is MessageKind.HP else None
    while total is None or len(bits) < total:
        decoded = decode_slot(edges, slot_start, est, tolerance)
        if decoded is None:
            return DecodedFrame(kind, None, bits, est, "decode")
        bits.append(decoded.bit)
        slot_start += est + decoded.observed_mid_offset
        if total is None and len(bits) == 3:
            size = bits_to_byte(bits)
            total = 3 + 8 * (1 if size == 0 else size) + 4
    if not crc4_check(bits):
        return DecodedFrame(kind, None, bits, est, "crc")
    try:
        if kind is MessageKind.HP:
            msg = parse_body(MessageKind.HP, [], bits[:8])
        else:
            msg = parse_body(MessageKind.LP, bits[:3], bits[3:-4])
    except FrameError:
        return DecodedFrame(kind, None, bits, est, "frame")
    return DecodedFrame(kind, msg, bits, est, None)
