"""Deterministic discrete-event kernel: virtual clock plus (time, seq) queue.

The kernel is randomness-free. Events at equal times dispatch strictly in
insertion order, so for a fixed scenario the full dispatch trace (including
seq values) is identical across runs and platforms.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable


class EventKind(str, Enum):
    ORDER_ARRIVAL = "OrderArrival"
    MACHINE_FAILURE = "MachineFailure"
    MACHINE_REPAIR = "MachineRepair"
    OPERATION_START = "OperationStart"
    OPERATION_END = "OperationEnd"
    TRANSPORT_START = "TransportStart"
    TRANSPORT_END = "TransportEnd"
    MESSAGE_DELIVERY = "MessageDelivery"
    CLOCK_COMMAND = "ClockCommand"


class Quiescence:
    """Sentinel limit: run until the event queue is empty."""

    def __repr__(self) -> str:  # pragma: no cover
        return "QUIESCENCE"


QUIESCENCE = Quiescence()


class KernelError(Exception):
    pass


class PastEvent(KernelError):
    pass


class HandlerFault(KernelError):
    def __init__(self, event: "SimEvent", cause: BaseException | str):
        super().__init__(f"handler fault on {event.kind.value} at t={event.time}: {cause}")
        self.event = event
        self.cause = cause


@dataclass(frozen=True)
class SimEvent:
    time: int
    seq: int
    kind: EventKind
    payload: dict[str, Any] = field(default_factory=dict)


class SimKernel:
    """Serially stepped engine; handlers may push further events while running."""

    def __init__(self) -> None:
        self.now = 0
        self._next_seq = 0
        self._heap: list[tuple[int, int, SimEvent]] = []
        self._handlers: dict[EventKind, Callable[[SimEvent], None]] = {}

    def on(self, kind: EventKind, handler: Callable[[SimEvent], None]) -> None:
        self._handlers[kind] = handler

    def push(self, time: int, kind: EventKind, payload: dict[str, Any] | None = None) -> SimEvent:
        if time < self.now:
            raise PastEvent(f"event at t={time} is before now={self.now}")
        event = SimEvent(time=time, seq=self._next_seq, kind=kind, payload=payload or {})
        self._next_seq += 1
        heapq.heappush(self._heap, (event.time, event.seq, event))
        return event

    def pending(self) -> int:
        return len(self._heap)

    def peek_time(self) -> int | None:
        return self._heap[0][0] if self._heap else None

    def run_until(self, limit: int | Quiescence = QUIESCENCE) -> list[SimEvent]:
        """Dispatch events in (time, seq) order up to and including `limit`.

        Returns the dispatch trace. The clock advances to each dispatched
        event's time and never decreases; events beyond the limit stay queued.
        """
        trace: list[SimEvent] = []
        while self._heap:
            time, _, _ = self._heap[0]
            if not isinstance(limit, Quiescence) and time > limit:
                break
            _, _, event = heapq.heappop(self._heap)
            self.now = event.time
            handler = self._handlers.get(event.kind)
            if handler is None:
                raise HandlerFault(event, "no handler registered")
            try:
                handler(event)
            except KernelError:
                raise
            except Exception as exc:
                raise HandlerFault(event, exc) from exc
            trace.append(event)
        return trace
