import pytest
from hypothesis import given, strategies as st

from flowline.kernel import (
    QUIESCENCE,
    EventKind,
    HandlerFault,
    PastEvent,
    SimKernel,
)


def collecting_kernel():
    kernel = SimKernel()
    seen = []
    for kind in EventKind:
        kernel.on(kind, seen.append)
    return kernel, seen


class TestOrdering:
    def test_time_major_seq_minor(self):
        kernel, seen = collecting_kernel()
        e1 = kernel.push(5, EventKind.CLOCK_COMMAND, {"n": 1})
        e2 = kernel.push(3, EventKind.CLOCK_COMMAND, {"n": 2})
        e3 = kernel.push(3, EventKind.CLOCK_COMMAND, {"n": 3})
        kernel.run_until(QUIESCENCE)
        assert [e.payload["n"] for e in seen] == [2, 3, 1]
        assert (e2.time, e2.seq) < (e3.time, e3.seq) < (e1.time, e1.seq)

    def test_push_at_now_runs_after_queued_same_time(self):
        kernel = SimKernel()
        order = []

        def handler(event):
            order.append(event.payload["n"])
            if event.payload["n"] == 1:
                kernel.push(kernel.now, EventKind.CLOCK_COMMAND, {"n": 3})

        kernel.on(EventKind.CLOCK_COMMAND, handler)
        kernel.push(4, EventKind.CLOCK_COMMAND, {"n": 1})
        kernel.push(4, EventKind.CLOCK_COMMAND, {"n": 2})
        kernel.run_until(QUIESCENCE)
        assert order == [1, 2, 3]

    def test_past_event_rejected(self):
        kernel, _ = collecting_kernel()
        kernel.push(4, EventKind.CLOCK_COMMAND)
        kernel.run_until(QUIESCENCE)
        assert kernel.now == 4
        with pytest.raises(PastEvent):
            kernel.push(2, EventKind.CLOCK_COMMAND)


class TestRunUntil:
    def test_empty_queue_quiesces_immediately(self):
        kernel, seen = collecting_kernel()
        trace = kernel.run_until(QUIESCENCE)
        assert trace == [] and seen == [] and kernel.now == 0

    def test_bounded_run(self):
        kernel, seen = collecting_kernel()
        for t in (1, 2, 3):
            kernel.push(t, EventKind.CLOCK_COMMAND, {"t": t})
        trace = kernel.run_until(2)
        assert [e.time for e in trace] == [1, 2]
        assert kernel.now == 2
        assert kernel.pending() == 1

    def test_every_event_dispatched_once_or_left_queued(self):
        kernel, seen = collecting_kernel()
        pushed = [kernel.push(t, EventKind.CLOCK_COMMAND) for t in (1, 5, 9)]
        kernel.run_until(5)
        assert len(seen) == 2 and kernel.pending() == 1
        kernel.run_until(QUIESCENCE)
        assert [e.seq for e in seen] == [e.seq for e in pushed]

    def test_handler_fault_carries_event(self):
        kernel = SimKernel()

        def broken(event):
            raise ValueError("boom")

        kernel.on(EventKind.CLOCK_COMMAND, broken)
        event = kernel.push(1, EventKind.CLOCK_COMMAND)
        with pytest.raises(HandlerFault) as err:
            kernel.run_until(QUIESCENCE)
        assert err.value.event.seq == event.seq

    def test_missing_handler_faults(self):
        kernel = SimKernel()
        kernel.push(1, EventKind.ORDER_ARRIVAL)
        with pytest.raises(HandlerFault):
            kernel.run_until(QUIESCENCE)


class TestDeterminism:
    @given(st.lists(st.integers(min_value=0, max_value=30), max_size=40))
    def test_trace_sorted_and_repeatable(self, times):
        def run():
            kernel, seen = collecting_kernel()
            for t in times:
                kernel.push(t, EventKind.CLOCK_COMMAND)
            kernel.run_until(QUIESCENCE)
            return [(e.time, e.seq) for e in seen]

        first, second = run(), run()
        assert first == second
        assert first == sorted(first)
        assert len({key for key in first}) == len(first)

    def test_clock_never_decreases(self):
        kernel = SimKernel()
        stamps = []

        def handler(event):
            stamps.append(kernel.now)
            if event.payload.get("spawn"):
                kernel.push(kernel.now + 2, EventKind.CLOCK_COMMAND, {})

        kernel.on(EventKind.CLOCK_COMMAND, handler)
        kernel.push(1, EventKind.CLOCK_COMMAND, {"spawn": True})
        kernel.push(1, EventKind.CLOCK_COMMAND, {})
        kernel.run_until(QUIESCENCE)
        assert stamps == sorted(stamps)
