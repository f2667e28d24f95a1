"""Deterministic discrete-event kernel with independent clock domains.

All simulation time is integer picoseconds.  Clock edge times are derived
from a rational period so that long runs accumulate no drift; each edge is
within 1 ps of the exact rational value.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

PS_PER_SECOND = 10**12


class SchedulingError(ValueError):
    """An event was scheduled before the current simulation time."""


class LivelockError(RuntimeError):
    """Too many events dispatched at a single instant."""


def _rational_period_ps(frequency_hz: float, offset_fraction: float) -> Fraction:
    freq = Fraction(frequency_hz).limit_denominator(10**9)
    off = Fraction(offset_fraction).limit_denominator(10**6)
    effective = freq * (1 + off)
    if effective <= 0:
        raise ValueError("effective clock frequency must be positive")
    return Fraction(PS_PER_SECOND) / effective


@dataclass(frozen=True)
class ClockDomain:
    """A free-running clock: nominal frequency, fractional offset, phase."""

    nominal_frequency: float
    offset_fraction: float = 0.0
    phase_offset: int = 0  # ps

    def __post_init__(self) -> None:
        period = _rational_period_ps(self.nominal_frequency, self.offset_fraction)
        if round(period) <= 0:
            raise ValueError("rounded clock period must be positive")
        object.__setattr__(self, "_num", period.numerator)
        object.__setattr__(self, "_den", period.denominator)

    @classmethod
    def from_period_ps(cls, period_ps: int, phase_offset: int = 0) -> "ClockDomain":
        return cls(PS_PER_SECOND / period_ps, 0.0, phase_offset)

    @property
    def period_ps(self) -> int:
        """Effective period rounded to integer picoseconds."""
        num: int = self._num  # type: ignore[attr-defined]
        den: int = self._den  # type: ignore[attr-defined]
        return (2 * num + den) // (2 * den)

    def edge_time(self, n: int) -> int:
        """Time of the n-th rising edge (n >= 1), rounded to 1 ps."""
        num: int = self._num  # type: ignore[attr-defined]
        den: int = self._den  # type: ignore[attr-defined]
        return self.phase_offset + (2 * n * num + den) // (2 * den)

    def next_edge_index(self, after: int) -> int:
        """Index of the first edge strictly after `after`."""
        num: int = self._num  # type: ignore[attr-defined]
        den: int = self._den  # type: ignore[attr-defined]
        n = max(1, ((after - self.phase_offset) * den) // num)
        while self.edge_time(n) <= after:
            n += 1
        while n > 1 and self.edge_time(n - 1) > after:
            n -= 1
        return n

    def next_edge_time(self, after: int) -> int:
        """First rising-edge time strictly after `after`."""
        return self.edge_time(self.next_edge_index(after))


class EventHandle:
    __slots__ = ("cancelled",)

    def __init__(self) -> None:
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class EventQueue:
    """Event loop dispatching (time, insertion order) lexicographically."""

    def __init__(self, same_time_cap: int = 10**6) -> None:
        self.now: int = 0
        self.same_time_cap = same_time_cap
        self._heap: list[tuple[int, int, EventHandle, Callable[[], None]]] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, at: int, callback: Callable[[], None]) -> EventHandle:
        if at < self.now:
            raise SchedulingError(f"schedule at t={at} before now={self.now}")
        handle = EventHandle()
        heapq.heappush(self._heap, (at, self._seq, handle, callback))
        self._seq += 1
        return handle

    def run_until(self, deadline: int) -> int:
        """Dispatch every event with time <= deadline.

        Returns the time of the last dispatched event, or `deadline` when
        nothing fired.  Raises LivelockError if more than `same_time_cap`
        events fire at one instant.
        """
        last = None
        burst_time = -1
        burst_count = 0
        heap = self._heap
        while heap and heap[0][0] <= deadline:
            at, _, handle, callback = heapq.heappop(heap)
            if handle.cancelled:
                continue
            self.now = at
            if at == burst_time:
                burst_count += 1
                if burst_count > self.same_time_cap:
                    raise LivelockError(f"{burst_count} events at t={at}")
            else:
                burst_time = at
                burst_count = 1
            callback()
            last = at
        self.now = max(self.now, deadline)
        return deadline if last is None else last
