"""
Deterministic discrete-event core.

Events are ordered by (fire_at, seq); seq is the insertion counter, so
simultaneous events fire in the order they were scheduled.
"""
from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field
from typing import Any, Callable, TextIO


class PastTime(ValueError):
    pass


class EventKind(enum.Enum):
    JobArrival = "JobArrival"
    NegotiateRequest = "NegotiateRequest"
    NegotiateReply = "NegotiateReply"
    JobDispatch = "JobDispatch"
    JobStart = "JobStart"
    JobCompletion = "JobCompletion"
    DirectoryQuery = "DirectoryQuery"


@dataclass(order=True)
class Event:
    fire_at: float
    seq: int
    kind: EventKind = field(compare=False)
    payload: Any = field(compare=False, default=None)
    cancelled: bool = field(compare=False, default=False)


@dataclass(frozen=True)
class EventHandle:
    event: Event

    def cancel(self) -> None:
        self.event.cancelled = True

    @property
    def fire_at(self) -> float:
        return self.event.fire_at


def _summary(payload: Any) -> str:
    if payload is None:
        return "-"
    if hasattr(payload, "summary"):
        return payload.summary()
    return str(payload)


class Simulator:
    """Event queue plus a handler table keyed by event kind.

    After `run_until(h)` the clock reads `h`, whether or not the queue
    drained. `run()` drains the queue and leaves the clock at the last event.
    """

    def __init__(self, log: TextIO | None = None):
        self._queue: list[Event] = []
        self._seq = 0
        self._now = 0.0
        self._handlers: dict[EventKind, Callable[[Event], None]] = {}
        self.processed = 0
        self.log = log

    def now(self) -> float:
        return self._now

    def on(self, kind: EventKind, handler: Callable[[Event], None]) -> None:
        self._handlers[kind] = handler

    def schedule(self, fire_at: float, kind: EventKind, payload: Any = None) -> EventHandle:
        if not math.isfinite(fire_at):
            raise ValueError(f"non-finite event time {fire_at}")
        if fire_at < self._now:
            raise PastTime(f"cannot schedule {kind.value} at {fire_at} < now {self._now}")
        ev = Event(float(fire_at), self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._queue, ev)
        return EventHandle(ev)

    def pending(self) -> int:
        return sum(1 for e in self._queue if not e.cancelled)

    def _fire(self, ev: Event) -> None:
        self._now = ev.fire_at
        self.processed += 1
        if self.log is not None:
            self.log.write(f"{ev.fire_at!r}\t{ev.seq}\t{ev.kind.value}\t{_summary(ev.payload)}\n")
        handler = self._handlers.get(ev.kind)
        if handler is not None:
            handler(ev)

    def run_until(self, horizon: float) -> int:
        if horizon < self._now:
            raise PastTime(f"horizon {horizon} < now {self._now}")
        if math.isinf(horizon):
            return self.run()
        count = 0
        while self._queue and self._queue[0].fire_at <= horizon:
            ev = heapq.heappop(self._queue)
            if ev.cancelled:
                continue
            self._fire(ev)
            count += 1
        self._now = horizon
        return count

    def run(self) -> int:
        count = 0
        while self._queue:
            ev = heapq.heappop(self._queue)
            if ev.cancelled:
                continue
            self._fire(ev)
            count += 1
        return count
