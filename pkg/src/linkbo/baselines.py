"""Analytical timing baselines: 1-wire and UNI/O comparison rows.

These are timing calculators, not bus FSMs.  They exist so the harness
can regenerate the protocol comparison table next to LinkBo numbers that
are computed from the frame formats in `framing`.

Units: microseconds for durations, kbps for rates.  Bit rate follows
R_b = B_total / T (total bits on the wire over transfer time); the
effective bit rate (EBR) is B_data / T, the upper limit for payload
data bits transferred per second.
"""

from __future__ import annotations

from dataclasses import dataclass

from .coding import SlotTiming
from .framing import Message, MessageKind, frame_duration, frame_slots

# Total bit slots in the first 1-wire transfer (reset pulse + this many
# 60 us slots reproduces the initial-rate figure; fitted, see
# onewire_bitrate).
ONEWIRE_FIRST_BURST_BITS = 640

# UNI/O comparison-row endpoints, stored as fitted constants rather
# than derived from a datasheet: the bus clock spans 10-100 kHz (one
# bit per clock), and the EBR endpoints equal the bit rate times the
# long-transfer payload fraction of a dual-ACK byte stream with an
# 8-bit sync header (~0.797).
UNIO_BIT_RATE_RANGE_KBPS = (10.0, 100.0)
UNIO_EBR_RANGE_KBPS = (7.97, 79.7)
UNIO_LATENCY_RANGE_US = (810.0, 1410.0)

# 1-wire latency band for the comparison table.  The lower bound has
# no first-principles derivation from the timing model above, so it is
# stored as a fitted constant; the upper bound is the full sync latency
# plus a command-byte round-up.
ONEWIRE_LATENCY_RANGE_US = (1520.0, 4880.0)


@dataclass(frozen=True)
class OneWireTiming:
    """1-wire bus timing: reset pulse then fixed-width bit slots."""

    reset_pulse_us: float = 960.0
    bit_slot_us: float = 60.0
    select_bits: int = 64  # 8 family code + 48 address + 8 CRC
    command_bits: int = 16
    data_bits: int = 64

    def __post_init__(self) -> None:
        if self.reset_pulse_us < 0 or self.bit_slot_us <= 0:
            raise ValueError("reset pulse must be >= 0, bit slot > 0")
        if min(self.select_bits, self.command_bits, self.data_bits) <= 0:
            raise ValueError("bit counts must be positive")


@dataclass(frozen=True)
class UnioTiming:
    """UNI/O byte stream: 8-bit sync header, two ACK slots per byte."""

    sync_bits: int = 8
    acks_per_byte: int = 2
    bit_period_us: float = 10.0  # 100 kHz bus clock (fastest supported)

    def __post_init__(self) -> None:
        if self.sync_bits < 0 or self.acks_per_byte < 0:
            raise ValueError("bit counts must be >= 0")
        if self.bit_period_us <= 0:
            raise ValueError("bit period must be positive")

    @property
    def slots_per_byte(self) -> int:
        return 8 + self.acks_per_byte

    def payload_fraction(self, n_bytes: int) -> float:
        """Payload bits over total bit slots for an n-byte transfer."""
        total = self.sync_bits + n_bytes * self.slots_per_byte
        return 8 * n_bytes / total


def onewire_sync_latency(timing: OneWireTiming | None = None) -> float:
    """Duration of the synchronization message in us (reset + select)."""
    t = timing or OneWireTiming()
    return t.reset_pulse_us + t.select_bits * t.bit_slot_us


def onewire_bitrate(timing: OneWireTiming | None = None,
                    first_transfer: bool = False) -> float:
    """1-wire bit rate in kbps, R_b = B_total / T.

    Steady state is one bit slot per bit.  The first transfer amortizes
    the reset pulse over ONEWIRE_FIRST_BURST_BITS bit slots; that burst
    length is fitted so the initial rate matches the reported figure
    (640 bits: 640 / (960 us + 640 x 60 us) = 16.260 kbps).
    """
    t = timing or OneWireTiming()
    if not first_transfer:
        return 1e3 / t.bit_slot_us
    n = ONEWIRE_FIRST_BURST_BITS
    return 1e3 * n / (t.reset_pulse_us + n * t.bit_slot_us)


def onewire_effective_bitrate(timing: OneWireTiming | None = None) -> float:
    """Steady-state payload rate: data bits per command + data slots."""
    t = timing or OneWireTiming()
    duration = (t.command_bits + t.data_bits) * t.bit_slot_us
    return 1e3 * t.data_bits / duration


def bit_rate_kbps(total_bits: int, duration_us: float) -> float:
    """R_b = B_total / T."""
    if duration_us <= 0:
        raise ValueError("duration must be positive")
    return 1e3 * total_bits / duration_us


def effective_bit_rate_kbps(payload_bits: int, duration_us: float) -> float:
    """EBR = B_data / T (payload data bits per unit time)."""
    return bit_rate_kbps(payload_bits, duration_us)


@dataclass(frozen=True)
class ComparisonRow:
    """One protocol row: (low, high) endpoints per column."""

    protocol: str
    bit_rate_kbps: tuple[float, float]
    ebr_kbps: tuple[float, float]
    latency_us: tuple[float, float]


def _linkbo_row(timing: SlotTiming) -> ComparisonRow:
    slot_us = timing.slot_period / 1e6
    hp = Message(MessageKind.HP, b"\x00")
    lp7 = Message(MessageKind.LP, bytes(7))
    hp_us = frame_duration(hp, timing) / 1e6
    lp7_us = frame_duration(lp7, timing) / 1e6
    # Every slot carries one symbol, so the gross rate is one bit per
    # slot period regardless of frame kind.
    rate = bit_rate_kbps(frame_slots(hp), hp_us)
    ebr_lo = effective_bit_rate_kbps(8, hp_us)
    ebr_hi = effective_bit_rate_kbps(56, lp7_us)
    del slot_us
    return ComparisonRow("linkbo", (rate, rate), (ebr_lo, ebr_hi),
                         (hp_us, lp7_us))


def protocol_comparison_row(protocol: str,
                            timing: SlotTiming | None = None) -> ComparisonRow:
    """Comparison-table row for 'onewire', 'unio' or 'linkbo'.

    LinkBo cells are recomputed from the frame formats at the given slot
    timing (default 3.36 us slots); baseline cells come from the
    analytical models and fitted constants above.
    """
    if protocol == "onewire":
        t = OneWireTiming()
        return ComparisonRow(
            "onewire",
            (onewire_bitrate(t, first_transfer=True), onewire_bitrate(t)),
            (onewire_effective_bitrate(t), onewire_effective_bitrate(t)),
            ONEWIRE_LATENCY_RANGE_US)
    if protocol == "unio":
        return ComparisonRow("unio", UNIO_BIT_RATE_RANGE_KBPS,
                             UNIO_EBR_RANGE_KBPS, UNIO_LATENCY_RANGE_US)
    if protocol == "linkbo":
        return _linkbo_row(timing or SlotTiming(3360000, 10))
    raise ValueError(f"unknown protocol {protocol!r}")


def comparison_table(timing: SlotTiming | None = None) -> list[ComparisonRow]:
    return [protocol_comparison_row(p, timing)
            for p in ("onewire", "unio", "linkbo")]
