"""
Space-shared FCFS local resource manager, no backfilling, no preemption.

Run times are deterministic, so the completion time projected when a job is
admitted is exact: later admissions queue strictly behind it and can never
delay it.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

from .economy import ClusterSpec, exec_time
from .engine import EventKind, Simulator


class TooLarge(ValueError):
    pass


class UnknownJob(KeyError):
    pass


class GuaranteeViolation(AssertionError):
    pass


@dataclass
class Allocation:
    job: object
    duration: float
    guaranteed_finish: float
    admitted_at: float
    host: int = -1
    start: float | None = None
    finish: float | None = None

    @property
    def procs(self) -> int:
        return self.job.procs

    def summary(self) -> str:
        return f"job={self.job.id} host={self.host} procs={self.procs} dur={self.duration!r}"


class Lrms:
    def __init__(self, cluster: ClusterSpec, sim: Simulator | None = None,
                 on_finish: Callable[[Allocation], None] | None = None):
        self.cluster = cluster
        self.sim = sim
        self.on_finish = on_finish
        self.running: dict[tuple, Allocation] = {}
        self.queue: list[Allocation] = []
        self.free_procs = cluster.procs
        self.busy_proc_seconds = 0.0
        self.history: list[Allocation] = []  # every started allocation, in start order

    def _duration(self, job, origin: ClusterSpec | None) -> float:
        if job.procs > self.cluster.procs:
            raise TooLarge(f"job {job.id} needs {job.procs} procs, {self.cluster.name} has {self.cluster.procs}")
        return exec_time(job, origin or self.cluster, self.cluster)

    def _project_start(self, procs: int, at: float) -> float:
        releases = [(a.finish, a.procs) for a in self.running.values()]
        heapq.heapify(releases)
        free = self.free_procs
        t = at
        for a in self.queue + [None]:
            need = procs if a is None else a.procs
            while free < need:
                f, p = heapq.heappop(releases)
                t = max(t, f)
                free += p
            if a is None:
                return t
            free -= need
            heapq.heappush(releases, (t + a.duration, need))
        raise AssertionError("unreachable")

    def estimate_completion(self, job, at: float, origin: ClusterSpec | None = None) -> float:
        """Completion time `job` would get if appended to the queue at `at`."""
        dur = self._duration(job, origin)
        return self._project_start(job.procs, at) + dur

    def admit(self, job, at: float, origin: ClusterSpec | None = None) -> float:
        dur = self._duration(job, origin)
        guaranteed = self._project_start(job.procs, at) + dur
        self.queue.append(Allocation(job, dur, guaranteed, at, self.cluster.id))
        self._start_ready(at)
        return guaranteed

    def _start_ready(self, now: float) -> None:
        while self.queue and self.queue[0].procs <= self.free_procs:
            a = self.queue.pop(0)
            a.start = now
            a.finish = now + a.duration
            if a.finish > a.guaranteed_finish:
                raise GuaranteeViolation(
                    f"job {a.job.id} on {self.cluster.name}: finish {a.finish!r} > guarantee {a.guaranteed_finish!r}")
            self.free_procs -= a.procs
            self.running[a.job.id] = a
            self.history.append(a)
            if self.sim is not None:
                self.sim.schedule(now, EventKind.JobStart, a)
                self.sim.schedule(a.finish, EventKind.JobCompletion, a)

    def on_completion(self, job_id, at: float) -> int:
        a = self.running.pop(job_id, None)
        if a is None:
            raise UnknownJob(job_id)
        self.free_procs += a.procs
        self.busy_proc_seconds += a.procs * (a.finish - a.start)
        self._start_ready(at)
        if self.on_finish is not None:
            self.on_finish(a)
        return a.procs

    def utilization(self, span_start: float, span_end: float) -> float:
        if span_end <= span_start:
            raise ValueError("span_end must exceed span_start")
        busy = 0.0
        for a in self.history:
            lo, hi = max(a.start, span_start), min(a.finish, span_end)
            if hi > lo:
                busy += a.procs * (hi - lo)
        return min(1.0, busy / (self.cluster.procs * (span_end - span_start)))

    def snapshot(self) -> tuple:
        return (
            self.free_procs,
            self.busy_proc_seconds,
            tuple(sorted((k, a.start, a.finish) for k, a in self.running.items())),
            tuple((a.job.id, a.guaranteed_finish) for a in self.queue),
            len(self.history),
        )
