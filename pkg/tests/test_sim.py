"""Event kernel and clock-domain tests."""

import pytest

from linkbo.sim import (ClockDomain, EventQueue, LivelockError,
                        PS_PER_SECOND, SchedulingError)


class TestClockDomain:
    def test_nominal_edges_have_no_drift(self):
        clk = ClockDomain(3e6)
        # edge 3,000,000 of a 3 MHz clock lands at exactly 1 second
        assert abs(clk.edge_time(3_000_000) - PS_PER_SECOND) <= 1

    def test_offset_fraction_scales_period(self):
        fast = ClockDomain(3e6, offset_fraction=0.05)
        slow = ClockDomain(3e6, offset_fraction=-0.05)
        n = 100_000
        assert abs(fast.edge_time(n) - n * PS_PER_SECOND / 3.15e6) <= 1
        assert abs(slow.edge_time(n) - n * PS_PER_SECOND / 2.85e6) <= 1

    def test_phase_offset_shifts_edges(self):
        base = ClockDomain(3e6)
        shifted = ClockDomain(3e6, phase_offset=12345)
        assert shifted.edge_time(7) == base.edge_time(7) + 12345

    def test_from_period_ps(self):
        clk = ClockDomain.from_period_ps(336000)
        for n in (1, 10, 1000):
            assert abs(clk.edge_time(n) - 336000 * n) <= 1

    def test_next_edge_strictly_after(self):
        clk = ClockDomain.from_period_ps(336000, phase_offset=1000)
        for after in (0, 999, 1000, 336999, 337000, 10**9):
            t = clk.next_edge_time(after)
            assert t > after
            n = clk.next_edge_index(after)
            assert n == 1 or clk.edge_time(n - 1) <= after

    def test_invalid_frequency_rejected(self):
        with pytest.raises(ValueError):
            ClockDomain(3e6, offset_fraction=-1.0)


class TestEventQueue:
    def test_dispatch_order_time_then_insertion(self):
        q = EventQueue()
        seen = []
        q.schedule(20, lambda: seen.append("b"))
        q.schedule(10, lambda: seen.append("a"))
        q.schedule(20, lambda: seen.append("c"))
        q.run_until(30)
        assert seen == ["a", "b", "c"]

    def test_run_until_respects_deadline(self):
        q = EventQueue()
        seen = []
        q.schedule(10, lambda: seen.append(1))
        q.schedule(40, lambda: seen.append(2))
        q.run_until(20)
        assert seen == [1]
        assert q.now == 20
        q.run_until(50)
        assert seen == [1, 2]

    def test_cancelled_events_do_not_fire(self):
        q = EventQueue()
        seen = []
        handle = q.schedule(10, lambda: seen.append(1))
        handle.cancel()
        q.run_until(20)
        assert seen == []

    def test_schedule_in_past_raises(self):
        q = EventQueue()
        q.schedule(10, lambda: None)
        q.run_until(10)
        with pytest.raises(SchedulingError):
            q.schedule(5, lambda: None)

    def test_same_instant_livelock_detected(self):
        q = EventQueue(same_time_cap=10)

        def reschedule():
            q.schedule(q.now, reschedule)

        q.schedule(1, reschedule)
        with pytest.raises(LivelockError):
            q.run_until(2)

    def test_events_scheduled_during_dispatch_run(self):
        q = EventQueue()
        seen = []
        q.schedule(10, lambda: q.schedule(15, lambda: seen.append("late")))
        q.run_until(20)
        assert seen == ["late"]
