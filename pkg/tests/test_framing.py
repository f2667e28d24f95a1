"""Frame construction, slot counts and parsing tests."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from linkbo.coding import SlotTiming, crc4_check
from linkbo.framing import (FrameError, Message, MessageKind,
                            format_message_literal, frame_duration,
                            frame_slots, half_slot_levels,
                            parse_body, parse_message_literal, plan_frame)

TIMING = SlotTiming(3360000, 10)


class TestMessage:
    def test_hp_needs_exactly_one_byte(self):
        Message(MessageKind.HP, b"\x5a")
        with pytest.raises(FrameError):
            Message(MessageKind.HP, b"")
        with pytest.raises(FrameError):
            Message(MessageKind.HP, b"\x01\x02")

    def test_lp_payload_range(self):
        Message(MessageKind.LP, bytes(7))
        with pytest.raises(FrameError):
            Message(MessageKind.LP, b"")
        with pytest.raises(FrameError):
            Message(MessageKind.LP, bytes(8))

    def test_addr_needs_address_and_no_payload(self):
        Message(MessageKind.ADDR, address=0x2A)
        with pytest.raises(FrameError):
            Message(MessageKind.ADDR)
        with pytest.raises(FrameError):
            Message(MessageKind.ADDR, b"\x01", address=1)


class TestSlotCounts:
    def test_hp_is_fifteen_slots(self):
        assert frame_slots(Message(MessageKind.HP, b"\x00")) == 15

    @pytest.mark.parametrize("n", range(1, 8))
    def test_lp_slot_formula(self, n):
        # sync(2) + size(3) + payload(8n) + crc(4) + ack(1)
        assert frame_slots(Message(MessageKind.LP, bytes(n))) == 10 + 8 * n

    def test_addr_is_eighteen_slots(self):
        assert frame_slots(Message(MessageKind.ADDR, address=7)) == 18

    def test_frame_durations_at_nominal_slot(self):
        hp = Message(MessageKind.HP, b"\x00")
        lp7 = Message(MessageKind.LP, bytes(7))
        assert frame_duration(hp, TIMING) == 15 * 3360000  # 50.4 us
        assert frame_duration(lp7, TIMING) == 66 * 3360000  # 221.76 us


class TestFramePlan:
    def test_crc_covers_size_and_payload(self):
        plan = plan_frame(Message(MessageKind.LP, b"\xA5\x3C"))
        assert crc4_check(list(plan.data_bits))
        assert plan.size_bits == (0, 1, 0)

    def test_hp_has_no_size_field(self):
        plan = plan_frame(Message(MessageKind.HP, b"\xFF"))
        assert plan.size_bits == ()
        assert len(plan.body_bits) == 8
        assert len(plan.crc_bits) == 4

    def test_addr_uses_reserved_size_code(self):
        plan = plan_frame(Message(MessageKind.ADDR, address=0x55))
        assert plan.size_bits == (0, 0, 0)

    def test_half_slot_levels_sync_shape(self):
        hp = half_slot_levels(plan_frame(Message(MessageKind.HP, b"\x00")))
        lp = half_slot_levels(plan_frame(Message(MessageKind.LP, b"\x00")))
        # HP sync holds low for three half-slots; LP sync is Manchester [1,1]
        assert [int(v) for v in hp[:4]] == [0, 0, 0, 1]
        assert [int(v) for v in lp[:4]] == [0, 1, 0, 1]

    def test_half_slot_count_matches_total_slots(self):
        for msg in (Message(MessageKind.HP, b"\x12"),
                    Message(MessageKind.LP, b"\x01\x02\x03"),
                    Message(MessageKind.ADDR, address=9)):
            plan = plan_frame(msg)
            assert len(half_slot_levels(plan)) == 2 * plan.total_slots


class TestParseBody:
    @given(st.binary(min_size=1, max_size=7))
    def test_lp_plan_parse_roundtrip(self, payload):
        msg = Message(MessageKind.LP, payload)
        plan = plan_frame(msg)
        parsed = parse_body(MessageKind.LP, list(plan.size_bits),
                            list(plan.body_bits[3:]))
        assert parsed == msg

    @given(st.integers(0, 255))
    def test_hp_plan_parse_roundtrip(self, byte):
        msg = Message(MessageKind.HP, bytes([byte]))
        plan = plan_frame(msg)
        parsed = parse_body(MessageKind.HP, [], list(plan.body_bits))
        assert parsed == msg

    def test_size_mismatch_rejected(self):
        with pytest.raises(FrameError):
            parse_body(MessageKind.LP, [0, 1, 0], [0] * 8)  # says 2 bytes


class TestLiterals:
    @pytest.mark.parametrize("text,kind,payload", [
        ("hp:0xAB", MessageKind.HP, b"\xab"),
        ("lp:0x01,0x02", MessageKind.LP, b"\x01\x02"),
        ("LP: 1, 2, 3", MessageKind.LP, b"\x01\x02\x03"),
    ])
    def test_parse(self, text, kind, payload):
        msg = parse_message_literal(text)
        assert msg.kind is kind
        assert msg.payload == payload

    def test_parse_addr(self):
        msg = parse_message_literal("addr:0x2A")
        assert msg.kind is MessageKind.ADDR
        assert msg.address == 0x2A

    def test_bad_literals_rejected(self):
        for text in ("xp:0x01", "lp:", "lp:0x100", "addr:1,2"):
            with pytest.raises(FrameError):
                parse_message_literal(text)

    @given(st.binary(min_size=1, max_size=7))
    def test_format_parse_roundtrip(self, payload):
        msg = Message(MessageKind.LP, payload)
        assert parse_message_literal(format_message_literal(msg)) == msg
