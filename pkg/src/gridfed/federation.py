"""
Grid Federation Agents and the superscheduling protocol.

Each arriving job walks a ranked list of candidate clusters. For every
candidate that survives the static screen, the origin agent sends a
Negotiate message, the candidate replies with a completion-time guarantee
or a refusal, and on acceptance the job is submitted. Message counts are
kept per job and per agent.

With zero message latency a whole negotiation resolves at the arrival
instant; with positive latency each inter-agent message is an event and the
host re-validates its guarantee when the job actually arrives.
"""
from __future__ import annotations

import enum
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, TextIO

from .directory import Directory, Quote
from .economy import ClusterSpec, Feasibility, exec_cost, feasible
from .engine import EventKind, Simulator
from .lrms import Allocation, GuaranteeViolation, Lrms
from .workload import JobSpec, Preference

log = logging.getLogger(__name__)


class Mode(enum.Enum):
    INDEPENDENT = "independent"
    FASTEST_FIRST = "federation_fastest_first"
    ECONOMY = "federation_economy"


class MsgKind(enum.Enum):
    Negotiate = "Negotiate"
    Reply = "Reply"
    JobSubmission = "JobSubmission"
    JobCompletion = "JobCompletion"


class Status(enum.Enum):
    Accepted = "Accepted"
    Rejected = "Rejected"


@dataclass
class ProtocolMessage:
    kind: MsgKind
    src: int
    dst: int
    job_id: tuple
    accept: bool | None = None
    guarantee: float | None = None

    def summary(self) -> str:
        return f"{self.kind.value} {self.src}->{self.dst} job={self.job_id}"


@dataclass
class JobOutcome:
    job: JobSpec
    status: Status
    host: int | None
    start: float | None
    finish: float | None
    cost_paid: float
    attempts: int
    messages: int
    origin_expected_cost: float
    origin_expected_time: float

    @property
    def job_id(self) -> tuple:
        return self.job.id

    @property
    def accepted(self) -> bool:
        return self.status is Status.Accepted

    @property
    def remote(self) -> bool:
        return self.accepted and self.host != self.job.origin

    @property
    def response_time(self) -> float | None:
        return None if self.finish is None else self.finish - self.job.submit


def entries_traversed(messages: int) -> float:
    """Directory-list entries walked to schedule a job that took `messages` messages."""
    return (messages - 2) / 2 if messages > 2 else messages / 2


def _origin_expectation(job: JobSpec, origin: ClusterSpec) -> dict:
    # what the job would cost and take at home; the processor check is skipped
    # so that jobs wider than their origin still get a figure
    compute = job.length / (origin.speed * job.procs)
    return dict(origin_expected_cost=origin.price * compute,
                origin_expected_time=compute + job.comm_overhead)


@dataclass
class Gfa:
    cluster: ClusterSpec
    lrms: Lrms
    local_messages: Counter = field(default_factory=Counter)
    remote_messages: Counter = field(default_factory=Counter)
    incentive: float = 0.0

    @property
    def local_total(self) -> int:
        return sum(self.local_messages.values())

    @property
    def remote_total(self) -> int:
        return sum(self.remote_messages.values())


@dataclass
class _Negotiation:
    job: JobSpec
    r: int = 0
    attempts: int = 0
    messages: int = 0
    host: int | None = None
    dir_rank: int = 0  # fastest-first walk position over the directory


class Federation:
    def __init__(self, clusters: Iterable[ClusterSpec], mode: Mode = Mode.ECONOMY,
                 sim: Simulator | None = None, message_latency: float = 0.0,
                 trace: TextIO | None = None, record_messages: bool = False):
        if message_latency < 0:
            raise ValueError("message_latency must be >= 0")
        self.mode = mode
        self.sim = sim or Simulator()
        self.latency = float(message_latency)
        self.trace = trace
        self.record = record_messages
        self.messages: list[ProtocolMessage] = []
        self.clusters: dict[int, ClusterSpec] = {}
        self.gfas: dict[int, Gfa] = {}
        self.directory = Directory()
        for c in clusters:
            if c.id in self.clusters:
                raise ValueError(f"duplicate cluster id {c.id}")
            self.clusters[c.id] = c
            self.gfas[c.id] = Gfa(c, Lrms(c, self.sim, on_finish=self._on_finish))
            self.directory.subscribe(Quote.of(c))
        self.outcomes: dict[tuple, JobOutcome] = {}
        self._order: list[tuple] = []
        self._pending: dict[tuple, _Negotiation] = {}
        self._finished_negs: dict[tuple, _Negotiation] = {}
        self.sim.on(EventKind.JobArrival, lambda ev: self.on_job_arrival(ev.payload))
        self.sim.on(EventKind.JobCompletion, lambda ev: self._complete(ev.payload))
        self.sim.on(EventKind.NegotiateRequest, lambda ev: self._negotiate_event(ev.payload))
        self.sim.on(EventKind.NegotiateReply, lambda ev: self._reply_event(ev.payload))
        self.sim.on(EventKind.JobDispatch, lambda ev: self._dispatch_event(ev.payload))

    # -- setup / driving

    def submit(self, jobs: Iterable[JobSpec]) -> None:
        for job in sorted(jobs, key=lambda j: (j.submit, j.origin, j.id)):
            if job.origin not in self.clusters:
                raise ValueError(f"job {job.id}: unknown origin cluster {job.origin}")
            if job.id in self._pending or job.id in self.outcomes:
                raise ValueError(f"duplicate job id {job.id}")
            self._order.append(job.id)
            self._pending[job.id] = _Negotiation(job)
            self.sim.schedule(job.submit, EventKind.JobArrival, job)

    def run(self) -> list[JobOutcome]:
        self.sim.run()
        return self.results()

    def results(self) -> list[JobOutcome]:
        return [self.outcomes[k] for k in self._order if k in self.outcomes]

    # -- messaging

    def _now(self) -> float:
        return self.sim.now()

    def _send(self, neg: _Negotiation, kind: MsgKind, src: int, dst: int, **kw) -> ProtocolMessage:
        msg = ProtocolMessage(kind, src, dst, neg.job.id, **kw)
        origin = neg.job.origin
        neg.messages += 1
        self.gfas[origin].local_messages[kind] += 1
        other = dst if src == origin else src
        if other != origin:
            self.gfas[other].remote_messages[kind] += 1
        if self.record:
            self.messages.append(msg)
        if self.trace is not None:
            detail = "-" if msg.accept is None else ("accept" if msg.accept else "reject")
            if msg.guarantee is not None:
                detail += f" {msg.guarantee!r}"
            jid = f"{neg.job.id[0]}:{neg.job.id[1]}"
            self.trace.write(f"{self._now()!r}\t{kind.value}\t{src}\t{dst}\t{jid}\t{detail}\n")
        return msg

    def _async(self, src: int, dst: int) -> bool:
        return self.latency > 0 and src != dst

    # -- candidate walk

    def _lookup(self, neg: _Negotiation) -> ClusterSpec | None:
        job = neg.job
        if self.mode is Mode.INDEPENDENT:
            return self.clusters[job.origin] if neg.r == 1 else None
        if self.mode is Mode.FASTEST_FIRST:
            if neg.r == 1:
                return self.clusters[job.origin]
            while True:
                neg.dir_rank += 1
                q = self.directory.kth_fastest(neg.dir_rank)
                if q is None or q.cluster_id != job.origin:
                    break
        elif job.preference is Preference.OFT:
            q = self.directory.kth_fastest(neg.r)
        else:
            q = self.directory.kth_cheapest(neg.r)
        return None if q is None else self.clusters[q.cluster_id]

    def _screened_out(self, job: JobSpec, host: ClusterSpec) -> bool:
        if host.procs < job.procs:
            return True
        return (self.mode is Mode.ECONOMY and job.preference is Preference.OFT
                and exec_cost(job, host) > job.budget)

    def _next_candidate(self, neg: _Negotiation) -> ClusterSpec | None:
        while True:
            neg.r += 1
            host = self._lookup(neg)
            if host is None:
                return None
            neg.attempts = neg.r
            if not self._screened_out(neg.job, host):
                return host

    # -- protocol steps

    def on_job_arrival(self, job: JobSpec) -> None:
        neg = self._pending[job.id]
        self._advance(neg)

    def _advance(self, neg: _Negotiation) -> None:
        origin = neg.job.origin
        while True:
            host = self._next_candidate(neg)
            if host is None:
                self._reject(neg)
                return
            neg.host = host.id
            msg = self._send(neg, MsgKind.Negotiate, origin, host.id)
            if self._async(origin, host.id):
                self.sim.schedule(self._now() + self.latency, EventKind.NegotiateRequest, msg)
                return
            reply = self.handle_negotiate(msg)
            if self._handle_reply(reply):
                return

    def handle_negotiate(self, msg: ProtocolMessage) -> ProtocolMessage:
        """Host side: answer with a completion-time guarantee or a refusal.

        Accepting reserves nothing; capacity is taken at submission.
        """
        assert msg.kind is MsgKind.Negotiate
        neg = self._pending[msg.job_id]
        job = neg.job
        host = self.clusters[msg.dst]
        arrive = self._now() + (2 * self.latency if self._async(msg.src, msg.dst) else 0.0)
        est = self.gfas[host.id].lrms.estimate_completion(job, arrive, self.clusters[job.origin])
        ok = self._admissible(job, host, est)
        return self._send(neg, MsgKind.Reply, msg.dst, msg.src, accept=ok, guarantee=est if ok else None)

    def _admissible(self, job: JobSpec, host: ClusterSpec, est: float) -> bool:
        origin = self.clusters[job.origin]
        check_budget = self.mode is Mode.ECONOMY
        return feasible(job, origin, host, est, check_budget=check_budget) is Feasibility.OK

    def _handle_reply(self, reply: ProtocolMessage) -> bool:
        """Origin side. Returns True once the job no longer needs the walk to continue."""
        neg = self._pending[reply.job_id]
        if not reply.accept:
            return False
        if reply.src == reply.dst:
            # local placement: no job transit, nothing counted
            sub = ProtocolMessage(MsgKind.JobSubmission, reply.dst, reply.src, reply.job_id)
        else:
            sub = self._send(neg, MsgKind.JobSubmission, reply.dst, reply.src)
        if self._async(sub.src, sub.dst):
            self.sim.schedule(self._now() + self.latency, EventKind.JobDispatch, sub)
            return True
        return self.handle_submission(sub)

    def handle_submission(self, msg: ProtocolMessage) -> bool:
        """Host side: re-check the guarantee and admit the job into the LRMS.

        Returns False when the guarantee no longer holds (only possible with
        positive latency); the origin then resumes its walk.
        """
        neg = self._pending[msg.job_id]
        job = neg.job
        host = self.clusters[msg.dst]
        lrms = self.gfas[host.id].lrms
        origin = self.clusters[job.origin]
        est = lrms.estimate_completion(job, self._now(), origin)
        if not self._admissible(job, host, est):
            if not self._async(msg.src, msg.dst):
                raise GuaranteeViolation(f"job {job.id}: guarantee on {host.name} slipped at zero latency")
            bounce = self._send(neg, MsgKind.Reply, host.id, job.origin, accept=False)
            self.sim.schedule(self._now() + self.latency, EventKind.NegotiateReply, bounce)
            return True
        guaranteed = lrms.admit(job, self._now(), origin)
        del self._pending[job.id]
        self.outcomes[job.id] = JobOutcome(
            job=job, status=Status.Accepted, host=host.id, start=None, finish=guaranteed,
            cost_paid=exec_cost(job, host), attempts=neg.attempts, messages=neg.messages,
            **_origin_expectation(job, origin),
        )
        self._finished_negs[job.id] = neg
        return True

    def _reject(self, neg: _Negotiation) -> None:
        job = neg.job
        origin = self.clusters[job.origin]
        del self._pending[job.id]
        self.outcomes[job.id] = JobOutcome(
            job=job, status=Status.Rejected, host=None, start=None, finish=None, cost_paid=0.0,
            attempts=max(neg.attempts, 1), messages=neg.messages,
            **_origin_expectation(job, origin),
        )

    # -- event adapters for positive latency

    def _negotiate_event(self, msg: ProtocolMessage) -> None:
        reply = self.handle_negotiate(msg)
        self.sim.schedule(self._now() + self.latency, EventKind.NegotiateReply, reply)

    def _reply_event(self, reply: ProtocolMessage) -> None:
        if not self._handle_reply(reply):
            self._advance(self._pending[reply.job_id])

    def _dispatch_event(self, msg: ProtocolMessage) -> None:
        self.handle_submission(msg)

    # -- completion

    def _complete(self, alloc: Allocation) -> None:
        self.gfas[alloc.host].lrms.on_completion(alloc.job.id, self._now())

    def _on_finish(self, alloc: Allocation) -> None:
        job = alloc.job
        out = self.outcomes[job.id]
        out.start, out.finish = alloc.start, alloc.finish
        self.gfas[alloc.host].incentive += out.cost_paid
        if alloc.host != job.origin:
            neg = self._finished_negs.pop(job.id)
            self._send(neg, MsgKind.JobCompletion, alloc.host, job.origin)
            out.messages = neg.messages
        else:
            self._finished_negs.pop(job.id, None)
