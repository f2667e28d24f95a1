"""Manchester (IEEE 802.3) slot coding, edge extraction and the CRC-4.

Polarity follows IEEE 802.3: a 1 bit is low-then-high (rising mid-slot),
a 0 bit is high-then-low.  The CRC is the 4-bit x^4 + x + 1 shift
register, zero initial state, bits shifted MSB-first, no final XOR.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .channel import EdgeDirection, LineLevel, LineTrace

CRC4_POLY = 0b10011  # x^4 + x + 1
CRC4_WIDTH = 4


@dataclass(frozen=True)
class SlotTiming:
    """Manchester slot period tied to a clock domain's prescaler division."""

    slot_period: int  # ps
    psc_division: int  # clock cycles per slot

    def __post_init__(self) -> None:
        if self.slot_period <= 0 or self.slot_period % 2:
            raise ValueError("slot_period must be a positive even number of ps")
        if self.psc_division <= 0 or self.psc_division % 2:
            raise ValueError("psc_division must be a positive even integer")

    @property
    def half_period(self) -> int:
        return self.slot_period // 2

    @classmethod
    def from_clock(cls, clock_period_ps: int, psc_division: int) -> "SlotTiming":
        return cls(clock_period_ps * psc_division, psc_division)


@dataclass(frozen=True)
class Edge:
    time: int
    direction: EdgeDirection


EdgeList = Sequence[Edge]


def mask_wave(timing: SlotTiming, n_slots: int) -> LineTrace:
    """Periodic mask: low first half, high second half of every slot."""
    if n_slots < 1:
        raise ValueError("n_slots must be >= 1")
    trace = LineTrace()
    for k in range(n_slots):
        trace.append(k * timing.slot_period, float(LineLevel.LOW))
        trace.append(k * timing.slot_period + timing.half_period,
                     float(LineLevel.HIGH))
    trace.duration_ps = n_slots * timing.slot_period
    return trace


def _halves(bit: int) -> tuple[LineLevel, LineLevel]:
    if bit:
        return LineLevel.LOW, LineLevel.HIGH
    return LineLevel.HIGH, LineLevel.LOW


def manchester_encode(bits: Sequence[int], timing: SlotTiming,
                      start_ps: int = 0) -> LineTrace:
    """Encode a bit sequence, one slot per bit with a mid-slot transition."""
    if not bits:
        raise ValueError("bits must be non-empty")
    trace = LineTrace()
    level = None
    t = start_ps
    for bit in bits:
        first, second = _halves(bit)
        if first != level:
            trace.append(t, float(first))
        trace.append(t + timing.half_period, float(second))
        level = second
        t += timing.slot_period
    trace.duration_ps = t
    return trace


def extract_edges(trace: LineTrace) -> list[Edge]:
    """Level changes of a digital trace, in time order."""
    edges: list[Edge] = []
    prev = None
    for t, v in trace.samples:
        level = LineLevel(int(v))
        if prev is not None and level != prev:
            edges.append(Edge(t, EdgeDirection.RISING if level is LineLevel.HIGH
                              else EdgeDirection.FALLING))
        prev = level
    return edges


@dataclass(frozen=True)
class DecodedSlot:
    bit: int
    observed_mid_offset: float  # same unit as the edge times


def decode_slot(edges: EdgeList, slot_start: float, slot_period: float,
                tolerance_fraction: float = 0.25) -> DecodedSlot | None:
    """Decode one Manchester slot from its nearby edges.

    Picks the edge closest to the expected mid-slot position; accepts it
    when it falls within +/- tolerance_fraction of a slot, else reports a
    decode error (None).  Works in any time unit (ps or clock cycles).
    """
    if not 0.0 < tolerance_fraction < 0.5:
        raise ValueError("tolerance_fraction must be in (0, 0.5)")
    expected_mid = slot_start + slot_period / 2.0
    window = tolerance_fraction * slot_period
    best: Edge | None = None
    for edge in edges:
        if abs(edge.time - expected_mid) <= window:
            if best is None or (abs(edge.time - expected_mid)
                                < abs(best.time - expected_mid)):
                best = edge
    if best is None:
        return None
    bit = 1 if best.direction is EdgeDirection.RISING else 0
    return DecodedSlot(bit, best.time - expected_mid)


def decode_bit_stream(edges: EdgeList, first_slot_start: float,
                      slot_period: float, n_bits: int,
                      tolerance_fraction: float = 0.25,
                      resync: bool = True) -> list[int] | None:
    """Decode n consecutive slots, optionally re-anchoring on observed edges.

    With resync enabled the next slot start follows the observed mid-slot
    edge, which keeps a slowly drifting transmitter inside the acceptance
    window.  Returns None at the first undecodable slot.
    """
    bits: list[int] = []
    slot_start = first_slot_start
    for _ in range(n_bits):
        decoded = decode_slot(edges, slot_start, slot_period, tolerance_fraction)
        if decoded is None:
            return None
        bits.append(decoded.bit)
        if resync:
            slot_start += slot_period + decoded.observed_mid_offset
        else:
            slot_start += slot_period
    return bits


def crc4_compute(bits: Iterable[int]) -> int:
    """LFSR remainder of bits * x^4 mod x^4 + x + 1, MSB-first, zero seed."""
    state = 0
    for bit in bits:
        feedback = ((state >> 3) & 1) ^ (bit & 1)
        state = ((state << 1) & 0xF) ^ (feedback * (CRC4_POLY & 0xF))
    return state


def crc4_bits(value: int) -> list[int]:
    """4-bit checksum as an MSB-first bit list."""
    return [(value >> i) & 1 for i in range(3, -1, -1)]


def crc4_check(bits_with_checksum: Sequence[int]) -> bool:
    """True iff the trailing 4 bits match the CRC of the preceding payload."""
    if len(bits_with_checksum) < CRC4_WIDTH:
        raise ValueError("message shorter than the checksum")
    return crc4_compute(bits_with_checksum) == 0
