"""
Workload ingestion and job synthesis.

Traces come either from Standard Workload Format (SWF) files or from a seeded
synthetic generator that writes the same SWF subset, so both routes share
`parse_swf`. `synthesize_jobs` turns trace records into full jobs with
length, communication overhead, budget and deadline derived from the origin
cluster.
"""
from __future__ import annotations

import enum
import logging
import math
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, TextIO

import numpy as np

from .economy import ClusterSpec, exec_cost, exec_time

log = logging.getLogger(__name__)

SWF_FIELDS = 18
TWO_DAYS = 172800.0


class MalformedLine(ValueError):
    def __init__(self, lineno: int, text: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {text!r}")
        self.lineno = lineno
        self.text = text
        self.reason = reason


class Preference(enum.Enum):
    OFC = "OFC"  # cheapest within deadline
    OFT = "OFT"  # fastest within budget


@dataclass(frozen=True)
class TraceRecord:
    job_id: int
    submit_time: float
    run_time: float
    procs: int
    user_id: int = -1


@dataclass(frozen=True)
class JobSpec:
    id: tuple[int, int]  # (origin cluster id, trace job id)
    user_id: int
    origin: int
    submit: float
    length: float  # MI, whole job
    procs: int
    comm_overhead: float  # seconds at origin
    budget: float
    deadline: float  # allowed delay after submit
    preference: Preference = Preference.OFC

    @property
    def due(self) -> float:
        return self.submit + self.deadline


@dataclass
class SwfParse:
    records: list[TraceRecord] = field(default_factory=list)
    dropped: list[tuple[int, str]] = field(default_factory=list)
    errors: list[MalformedLine] = field(default_factory=list)

    @property
    def warnings(self) -> int:
        return len(self.dropped)


@dataclass(frozen=True)
class SynthParams:
    arrival_rate: float  # jobs / second
    runtime_log_mean: float
    runtime_log_sigma: float
    max_proc_power: int
    job_count: int
    seed: int = 0
    users: int = 0  # 0 leaves user ids unknown (-1)

    def __post_init__(self):
        if self.job_count < 1:
            raise ValueError("job_count must be >= 1")
        if self.arrival_rate <= 0 or self.runtime_log_sigma <= 0:
            raise ValueError("arrival_rate and runtime_log_sigma must be > 0")
        if self.max_proc_power < 0 or self.users < 0:
            raise ValueError("max_proc_power and users must be >= 0")


def _num(tok: str) -> float:
    v = float(tok)
    if not math.isfinite(v):
        raise ValueError(tok)
    return v


def parse_swf(stream: TextIO | Iterable[str], strict: bool = False) -> SwfParse:
    """Read SWF job lines.

    Uses column 1 (job id), 2 (submit), 4 (run time), 5 (allocated procs,
    falling back to 8 when 5 is -1) and 12 (user id, optional). Records with
    non-positive run time or processor count are dropped and counted.
    Non-numeric required fields raise `MalformedLine` when ``strict``,
    otherwise they are collected in ``errors``.
    """
    out = SwfParse()
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        cols = line.split()
        if len(cols) < 5:
            err = MalformedLine(lineno, line, "too few fields")
            if strict:
                raise err
            out.errors.append(err)
            continue
        try:
            job_id = int(_num(cols[0]))
            submit = _num(cols[1])
            run = _num(cols[3])
            procs = int(_num(cols[4]))
            if procs == -1 and len(cols) >= 8:
                procs = int(_num(cols[7]))
            user = int(_num(cols[11])) if len(cols) >= 12 else -1
        except ValueError:
            err = MalformedLine(lineno, line, "non-numeric field")
            if strict:
                raise err from None
            out.errors.append(err)
            continue
        if run <= 0:
            out.dropped.append((lineno, "run_time <= 0"))
            continue
        if procs <= 0:
            out.dropped.append((lineno, "procs <= 0"))
            continue
        if submit < 0:
            out.dropped.append((lineno, "submit < 0"))
            continue
        out.records.append(TraceRecord(job_id, submit, run, procs, user))
    if out.dropped:
        log.warning("dropped %d SWF records", len(out.dropped))
    return out


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def write_swf(records: Iterable[TraceRecord], stream: TextIO, header: str | None = None) -> None:
    """Emit records as 18-column SWF lines, unknown columns as -1."""
    if header:
        for h in header.splitlines():
            stream.write(f"; {h}\n")
    for r in records:
        cols = ["-1"] * SWF_FIELDS
        cols[0] = str(r.job_id)
        cols[1] = _fmt(r.submit_time)
        cols[3] = _fmt(r.run_time)
        cols[4] = str(r.procs)
        cols[7] = str(r.procs)
        cols[10] = "1"
        cols[11] = str(r.user_id)
        stream.write(" ".join(cols) + "\n")


def clip_horizon(records: Iterable[TraceRecord], horizon_seconds: float = TWO_DAYS) -> list[TraceRecord]:
    """Shift the trace so its earliest submit is 0, keep submits <= horizon."""
    if horizon_seconds <= 0:
        raise ValueError("horizon_seconds must be > 0")
    records = list(records)
    if not records:
        return []
    t0 = min(r.submit_time for r in records)
    shifted = (replace(r, submit_time=r.submit_time - t0) for r in records)
    return [r for r in shifted if r.submit_time <= horizon_seconds]


def synthesize_jobs(records: Iterable[TraceRecord], origin: ClusterSpec, comm_fraction: float = 0.10,
                    budget_factor: float = 2.0, deadline_factor: float = 2.0) -> list[JobSpec]:
    """Build jobs whose execution time on their origin equals the trace run time.

    A fraction ``comm_fraction`` of the run time becomes communication
    overhead, the rest is compute. Budget and deadline are the given
    multiples of the origin's own cost and time. Records asking for more
    processors than the origin owns are dropped with a warning.
    """
    if not 0 <= comm_fraction < 1:
        raise ValueError("comm_fraction must be in [0, 1)")
    if budget_factor <= 0 or deadline_factor <= 0:
        raise ValueError("budget_factor and deadline_factor must be > 0")
    jobs = []
    too_big = 0
    for r in records:
        if r.procs > origin.procs:
            too_big += 1
            continue
        job = JobSpec(
            id=(origin.id, r.job_id),
            user_id=r.user_id,
            origin=origin.id,
            submit=float(r.submit_time),
            length=(1.0 - comm_fraction) * r.run_time * origin.speed * r.procs,
            procs=r.procs,
            comm_overhead=comm_fraction * r.run_time,
            budget=1.0,
            deadline=1.0,
        )
        jobs.append(replace(job, budget=budget_factor * exec_cost(job, origin),
                            deadline=deadline_factor * exec_time(job, origin, origin)))
    if too_big:
        log.warning("%s: dropped %d records needing more than %d procs", origin.name, too_big, origin.procs)
    return jobs


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def assign_preferences(jobs: Iterable[JobSpec], oft_percent: int, seed: int = 0) -> list[JobSpec]:
    """Mark a seeded share of users as OFT, the rest OFC.

    Users are keyed by (origin, user_id); jobs with unknown user ids are
    their own unit. The OFT set for a higher percentage always contains the
    set for a lower one under the same seed.
    """
    if not 0 <= oft_percent <= 100:
        raise ValueError("oft_percent must be within 0..100")
    jobs = list(jobs)

    def unit(j: JobSpec):
        return (j.origin, j.user_id, -1) if j.user_id >= 0 else (j.origin, -1, j.id[1])

    units = sorted({unit(j) for j in jobs})
    random.Random(seed).shuffle(units)
    n_oft = _round_half_up(oft_percent / 100 * len(units))
    oft = set(units[:n_oft])
    return [replace(j, preference=Preference.OFT if unit(j) in oft else Preference.OFC) for j in jobs]


def generate_synthetic(params: SynthParams) -> list[TraceRecord]:
    """Poisson arrivals, lognormal run times, power-of-two processor counts.

    Times are rounded to whole seconds as in archive traces, so the records
    survive an SWF round trip unchanged.
    """
    rng = np.random.default_rng(params.seed)
    gaps = rng.exponential(1.0 / params.arrival_rate, params.job_count)
    runs = rng.lognormal(params.runtime_log_mean, params.runtime_log_sigma, params.job_count)
    powers = rng.integers(0, params.max_proc_power, params.job_count, endpoint=True)
    users = (rng.integers(0, params.users, params.job_count) if params.users
             else np.full(params.job_count, -1))
    submits = np.cumsum(gaps)
    return [
        TraceRecord(i + 1, float(round(submits[i])), float(max(1, round(runs[i]))),
                    int(2 ** powers[i]), int(users[i]))
        for i in range(params.job_count)
    ]
