"""Tests for the discrete-event kernel and seeded random streams."""

import numpy as np
import pytest

from hetcell.enums import StreamPurpose
from hetcell.kernel import Kernel, KernelError, RngStream, uniform_int


# ---- schedule / cancel ----


class TestSchedule:
    def test_event_at_zero_fires_first(self, kernel):
        fired = []
        kernel.schedule(5, fired.append, "late")
        kernel.schedule(0, fired.append, "first")
        kernel.run_until(10)
        assert fired == ["first", "late"]

    def test_ties_fire_in_insertion_order(self, kernel):
        fired = []
        for tag in "abcde":
            kernel.schedule(7, fired.append, tag)
        kernel.run_until(7)
        assert fired == list("abcde")

    def test_cancelled_event_never_fires(self, kernel):
        fired = []
        handle = kernel.schedule(3, fired.append, "x")
        Kernel.cancel(handle)
        kernel.run_until(100)
        assert fired == []
        assert kernel.pending_count() == 0

    def test_cancel_none_and_fired_is_noop(self, kernel):
        handle = kernel.schedule(1, lambda: None)
        kernel.run_until(2)
        Kernel.cancel(handle)
        Kernel.cancel(None)

    def test_schedule_in_past_is_fatal(self, kernel):
        kernel.run_until(50)
        with pytest.raises(KernelError):
            kernel.schedule(49, lambda: None)

    def test_schedule_in_is_relative(self, kernel):
        kernel.run_until(100)
        event = kernel.schedule_in(16, lambda: None)
        assert event.fire_at == 116


# ---- run_until ----


class TestRunUntil:
    def test_empty_queue_advances_clock(self, kernel):
        assert kernel.run_until(10**6) == 10**6
        assert kernel.events_fired == 0

    def test_single_event_fires_once(self, kernel):
        seen = []
        kernel.schedule(5, lambda: seen.append(kernel.now))
        kernel.run_until(1000)
        assert seen == [5]
        assert kernel.now == 1000

    def test_same_time_chain_fires_in_same_call(self):
        k = Kernel(seed=1, trace=True)

        def first():
            k.schedule(k.now, lambda: None, name="second")

        k.schedule(20, first, name="first")
        k.run_until(20)
        assert [r.name for r in k.trace] == ["first", "second"]
        assert all(r.time_us == 20 for r in k.trace)

    def test_events_after_t_end_stay_queued(self, kernel):
        fired = []
        kernel.schedule(10, fired.append, 1)
        kernel.schedule(11, fired.append, 2)
        kernel.run_until(10)
        assert fired == [1]
        assert kernel.pending_count() == 1

    def test_running_backwards_is_fatal(self, kernel):
        kernel.run_until(10)
        with pytest.raises(KernelError):
            kernel.run_until(9)

    def test_trace_is_totally_ordered(self):
        k = Kernel(seed=3, trace=True)
        for t in (9, 3, 3, 7, 0):
            k.schedule(t, lambda: None, name=f"e{t}")
        k.run_until(10)
        times = [r.time_us for r in k.trace]
        assert times == sorted(times)


# ---- random streams ----


class TestRandomStreams:
    def test_lo_equals_hi(self):
        assert uniform_int(RngStream(1, 0), 4, 4) == 4

    def test_lo_above_hi_is_fatal(self):
        with pytest.raises(KernelError):
            uniform_int(RngStream(1, 0), 5, 4)

    def test_same_seed_same_sequence(self):
        a, b = RngStream(42, 3), RngStream(42, 3)
        assert [a.uniform_int(0, 1023) for _ in range(1000)] == [b.uniform_int(0, 1023) for _ in range(1000)]

    def test_streams_differ_by_id(self):
        a, b = RngStream(42, 3), RngStream(42, 4)
        assert [a.uniform_int(0, 1023) for _ in range(50)] != [b.uniform_int(0, 1023) for _ in range(50)]

    def test_draws_stay_in_range(self):
        s = RngStream(7, 0)
        draws = {s.uniform_int(0, 15) for _ in range(2000)}
        assert draws == set(range(16))

    def test_empirical_mean(self):
        s = RngStream(11, 0)
        mean = np.mean([s.uniform_int(0, 15) for _ in range(200_000)])
        assert mean == pytest.approx(7.5, abs=0.05)

    def test_kernel_stream_is_cached_per_purpose(self, kernel):
        a = kernel.stream(2, StreamPurpose.BACKOFF)
        assert kernel.stream(2, StreamPurpose.BACKOFF) is a
        assert kernel.stream(3, StreamPurpose.BACKOFF) is not a

    def test_negative_seed_rejected(self):
        with pytest.raises(KernelError):
            RngStream(-1, 0)
