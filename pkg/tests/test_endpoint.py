"""Device configuration and offline frame-decoder tests."""

import pytest

from linkbo.channel import LineLevel, LineTrace
from linkbo.coding import SlotTiming
from linkbo.endpoint import DeviceConfig, decode_trace
from linkbo.framing import (Message, MessageKind, frame_wave,
                            half_slot_levels, plan_frame)

TIMING = SlotTiming(3360000, 10)
SLOT = float(TIMING.slot_period)


def trace_for(msg: Message, timing: SlotTiming = TIMING,
              start_ps: int | None = None) -> LineTrace:
    """Frame waveform preceded by an idle-high sample."""
    start = timing.slot_period if start_ps is None else start_ps
    wave = frame_wave(plan_frame(msg), timing, start_ps=start)
    trace = LineTrace()
    trace.append(0, float(LineLevel.HIGH))
    for t, v in wave.samples:
        trace.append(t, v)
    trace.duration_ps = wave.duration_ps
    return trace


def trace_from_halves(halves, timing: SlotTiming = TIMING) -> LineTrace:
    trace = LineTrace()
    trace.append(0, float(LineLevel.HIGH))
    t = timing.slot_period
    level = LineLevel.HIGH
    for half in halves:
        if half != level:
            trace.append(t, float(half))
        level = half
        t += timing.half_period
    trace.duration_ps = t
    return trace


class TestDeviceConfig:
    def test_psc_must_be_even_positive(self):
        with pytest.raises(ValueError):
            DeviceConfig(name="x", psc_division=9)
        with pytest.raises(ValueError):
            DeviceConfig(name="x", psc_division=0)

    def test_defaults(self):
        cfg = DeviceConfig(name="x")
        assert cfg.psc_division == 10
        assert cfg.decode_tolerance == 0.25
        assert cfg.retry_limit == 8


class TestDecodeTrace:
    @pytest.mark.parametrize("msg", [
        Message(MessageKind.HP, b"\x5a"),
        Message(MessageKind.HP, b"\x00"),
        Message(MessageKind.HP, b"\xff"),
        Message(MessageKind.LP, b"\x01"),
        Message(MessageKind.LP, b"\xde\xad\xbe\xef"),
        Message(MessageKind.LP, bytes(range(7))),
    ])
    def test_decodes_clean_frames(self, msg):
        frame = decode_trace(trace_for(msg), SLOT)
        assert frame.error is None
        assert frame.kind is msg.kind
        assert frame.message == msg

    def test_decodes_addr_frame(self):
        msg = Message(MessageKind.ADDR, address=0x2A)
        frame = decode_trace(trace_for(msg), SLOT)
        assert frame.error is None
        assert frame.message == msg

    def test_flat_trace_reports_no_sync(self):
        trace = LineTrace()
        trace.append(0, 1.0)
        trace.append(10**7, 1.0)
        assert decode_trace(trace, SLOT).error == "no_sync"

    def test_stuck_low_reports_sync_timeout(self):
        trace = LineTrace()
        trace.append(0, 1.0)
        trace.append(1000, 0.0)
        trace.append(10**8, 0.0)
        assert decode_trace(trace, SLOT).error == "sync_timeout"

    def test_corrupted_payload_slot_reports_crc(self):
        plan = plan_frame(Message(MessageKind.LP, b"\x0f\xf0"))
        halves = list(half_slot_levels(plan))
        # invert one payload Manchester slot (body starts after the 2-slot
        # sync; slot 8 is safely inside the payload field)
        i = 2 * 8
        halves[i], halves[i + 1] = halves[i + 1], halves[i]
        frame = decode_trace(trace_from_halves(halves), SLOT)
        assert frame.error == "crc"

    def test_sync_measurement_beats_wrong_nominal(self):
        # decoder told a 20% longer nominal slot; within the default 25%
        # clamp the sync-based estimate wins and decoding succeeds
        msg = Message(MessageKind.HP, b"\xa5")
        frame = decode_trace(trace_for(msg), SLOT * 1.2)
        assert frame.error is None
        assert frame.slot_period == pytest.approx(SLOT)
        assert frame.message == msg

    def test_tight_clamp_falls_back_to_nominal(self):
        # 4% nominal mismatch with a 1% clamp: estimate reverts to the
        # nominal slot, and per-slot re-sync still recovers the frame
        msg = Message(MessageKind.LP, b"\x55\xaa")
        frame = decode_trace(trace_for(msg), SLOT * 1.04, slot_clamp=0.01)
        assert frame.error is None
        assert frame.slot_period == pytest.approx(SLOT * 1.04)
        assert frame.message == msg
