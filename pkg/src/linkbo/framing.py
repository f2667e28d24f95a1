"""Frame construction and parsing for HP, LP and address messages.

Field order on the wire: sync, [size], payload, crc, ack.  Bytes and the
size field travel MSB-first.  The 4-bit CRC covers the size bits (when
present) plus the payload bits; the sync field is not data.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .channel import LineLevel, LineTrace
from .coding import SlotTiming, crc4_bits, crc4_compute, manchester_encode

SIZE_FIELD_BITS = 3
ADDR_SIZE_CODE = 0  # reserved '000' size selects the address message type
MAX_LP_PAYLOAD = 7
HP_TOTAL_SLOTS = 15


class MessageKind(enum.Enum):
    HP = "hp"
    LP = "lp"
    ADDR = "addr"


class FrameError(ValueError):
    """Malformed message or frame field mismatch."""


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    payload: bytes = b""
    address: int | None = None

    def __post_init__(self) -> None:
        if self.kind is MessageKind.HP:
            if len(self.payload) != 1:
                raise FrameError("HP payload must be exactly 1 byte")
        elif self.kind is MessageKind.LP:
            if not 1 <= len(self.payload) <= MAX_LP_PAYLOAD:
                raise FrameError("LP payload must be 1..7 bytes")
        else:
            if self.address is None or not 0 <= self.address <= 0xFF:
                raise FrameError("ADDR message needs an 8-bit address")
            if self.payload:
                raise FrameError("ADDR message carries no payload")

    @property
    def payload_bytes(self) -> bytes:
        if self.kind is MessageKind.ADDR:
            return bytes([self.address or 0])
        return self.payload


def byte_to_bits(value: int) -> list[int]:
    return [(value >> i) & 1 for i in range(7, -1, -1)]


def bits_to_byte(bits: list[int]) -> int:
    value = 0
    for bit in bits:
        value = (value << 1) | (bit & 1)
    return value


@dataclass(frozen=True)
class FramePlan:
    kind: MessageKind
    size_bits: tuple[int, ...]  # empty for HP
    body_bits: tuple[int, ...]  # size bits (if any) then payload bits
    crc_bits: tuple[int, ...]
    total_slots: int

    @property
    def data_bits(self) -> tuple[int, ...]:
        """Everything the receiver decodes slot by slot: body then CRC."""
        return self.body_bits + self.crc_bits


def plan_frame(msg: Message) -> FramePlan:
    payload_bits: list[int] = []
    for byte in msg.payload_bytes:
        payload_bits.extend(byte_to_bits(byte))
    if msg.kind is MessageKind.HP:
        size_bits: list[int] = []
        body = payload_bits
        total = HP_TOTAL_SLOTS
    else:
        size_code = ADDR_SIZE_CODE if msg.kind is MessageKind.ADDR else len(msg.payload)
        size_bits = [(size_code >> i) & 1 for i in range(2, -1, -1)]
        body = size_bits + payload_bits
        total = 2 + SIZE_FIELD_BITS + len(payload_bits) + 4 + 1
    crc = crc4_bits(crc4_compute(body))
    return FramePlan(msg.kind, tuple(size_bits), tuple(body), tuple(crc), total)


def half_slot_levels(plan: FramePlan) -> list[LineLevel]:
    """Logical level of every half-slot, sync through ACK (ACK released high)."""
    low, high = LineLevel.LOW, LineLevel.HIGH
    if plan.kind is MessageKind.HP:
        halves = [low, low, low, high]
    else:
        halves = [low, high, low, high]  # Manchester [1, 1]
    for bit in plan.data_bits:
        halves.extend((low, high) if bit else (high, low))
    halves.extend((high, high))  # ACK slot: transmitter releases
    return halves


def frame_wave(plan: FramePlan, timing: SlotTiming, start_ps: int = 0) -> LineTrace:
    """Transmitter-side serialization of a frame (ACK slot left high)."""
    trace = LineTrace()
    level = None
    t = start_ps
    for half in half_slot_levels(plan):
        if half != level:
            trace.append(t, float(half))
        level = half
        t += timing.half_period
    trace.duration_ps = t
    return trace


def frame_slots(msg: Message) -> int:
    return plan_frame(msg).total_slots


def frame_duration(msg: Message, timing: SlotTiming) -> int:
    """Gapless frame duration in ps: slot count times slot period."""
    return frame_slots(msg) * timing.slot_period


def parse_body(kind: MessageKind, size_bits: list[int],
               body_bits: list[int]) -> Message:
    """Reassemble a Message from decoded size and payload bits."""
    if kind is MessageKind.HP:
        if size_bits:
            raise FrameError("HP frames have no size field")
        if len(body_bits) != 8:
            raise FrameError("HP payload must be 8 bits")
        return Message(MessageKind.HP, bytes([bits_to_byte(body_bits)]))
    if len(size_bits) != SIZE_FIELD_BITS:
        raise FrameError("size field must be 3 bits")
    size_code = bits_to_byte(size_bits)
    n_bytes = 1 if size_code == ADDR_SIZE_CODE else size_code
    if len(body_bits) != 8 * n_bytes:
        raise FrameError(
            f"size field {size_code} expects {8 * n_bytes} payload bits, "
            f"got {len(body_bits)}")
    data = bytes(bits_to_byte(body_bits[i:i + 8])
                 for i in range(0, len(body_bits), 8))
    if size_code == ADDR_SIZE_CODE:
        return Message(MessageKind.ADDR, address=data[0])
    return Message(MessageKind.LP, data)


def parse_message_literal(text: str) -> Message:
    """Parse `hp:0xAB`, `lp:0x01,0x02` or `addr:0x2A` literals."""
    try:
        kind_str, _, rest = text.strip().partition(":")
        kind = MessageKind(kind_str.lower())
        values = [int(v, 0) for v in rest.split(",") if v.strip()]
    except ValueError as exc:
        raise FrameError(f"bad message literal {text!r}") from exc
    if kind is MessageKind.ADDR:
        if len(values) != 1:
            raise FrameError("addr literal takes one value")
        return Message(kind, address=values[0])
    if any(not 0 <= v <= 0xFF for v in values):
        raise FrameError("payload bytes must be 0..255")
    return Message(kind, bytes(values))


def format_message_literal(msg: Message) -> str:
    if msg.kind is MessageKind.ADDR:
        return f"addr:0x{msg.address:02X}"
    body = ",".join(f"0x{b:02X}" for b in msg.payload)
    return f"{msg.kind.value}:{body}"
