"""
Scenario assembly and the three experiment drivers: single run, population
sweep over OFT share, and system-size scaling.
"""
from __future__ import annotations

import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .config import ClusterEntry, ScenarioConfig
from .economy import REFERENCE_ROSTER, ClusterSpec, quote_price
from .engine import Simulator
from .federation import Federation, JobOutcome, Mode, entries_traversed
from .metrics import MetricsReport, emit_csv, emit_sweep_csv, emit_sweep_dat, finalize, write_dat
from .workload import (JobSpec, SynthParams, TraceRecord, assign_preferences, clip_horizon,
                       generate_synthetic, parse_swf, synthesize_jobs)

log = logging.getLogger(__name__)

SWEEP_PROFILES = tuple(range(0, 101, 10))

# Bundled desk-scale workload, ~500 jobs on the reference roster. Job counts
# follow the relative archive trace sizes; log-mean run times are set so each
# cluster's offered load is roughly its utilization without federation.
# (name, job_count, runtime_log_mean, runtime_log_sigma, max_proc_power, users)
BUNDLED = (
    ("CTC SP2", 78, 8.77, 1.0, 8, 12),
    ("KTH SP2", 31, 9.14, 1.0, 6, 6),
    ("LANL CM5", 40, 9.42, 1.0, 9, 8),
    ("LANL Origin", 153, 8.13, 1.0, 10, 20),
    ("NASA iPSC", 100, 8.43, 1.0, 6, 14),
    ("SDSC Par96", 36, 9.23, 1.0, 8, 6),
    ("SDSC Blue", 40, 10.09, 1.0, 9, 8),
    ("SDSC SP2", 21, 10.23, 1.0, 6, 4),
)


def bundled_entries(horizon: float = 172800.0) -> list[ClusterEntry]:
    entries = []
    for (name, procs, speed, bw, _quote), (bname, count, mu, sigma, power, users) in zip(REFERENCE_ROSTER, BUNDLED):
        assert name == bname
        rate = count / (0.9 * horizon)
        synth = SynthParams(rate, mu, sigma, power, count, seed=-1, users=users)
        entries.append(ClusterEntry(name, procs, float(speed), bw, synth=synth))
    return entries


def _subseed(*parts: int) -> int:
    return int(np.random.SeedSequence([abs(p) for p in parts]).generate_state(1)[0])


@dataclass
class Scenario:
    clusters: list[ClusterSpec]
    jobs: list[JobSpec]
    ingestion_dropped: int


def cluster_records(entry: ClusterEntry, cfg: ScenarioConfig, index: int) -> tuple[list[TraceRecord], int]:
    """Unclipped records for the `index`-th configured cluster, plus the count dropped while parsing."""
    if entry.trace is not None:
        path = entry.trace if os.path.isabs(entry.trace) else os.path.join(cfg.base_dir, entry.trace)
        with open(path, encoding="utf-8") as fh:
            parsed = parse_swf(fh)
        return parsed.records, len(parsed.dropped) + len(parsed.errors)
    synth = entry.synth
    if synth.seed < 0:
        synth = replace(synth, seed=_subseed(cfg.seed, index))
    return generate_synthetic(synth), 0


def _jitter(records: list[TraceRecord], amount: float, seed: int) -> list[TraceRecord]:
    if amount <= 0:
        return list(records)
    rng = np.random.default_rng(seed)
    shifts = rng.uniform(-amount, amount, len(records))
    moved = [replace(r, submit_time=float(max(0.0, round(r.submit_time + s)))) for r, s in zip(records, shifts)]
    return sorted(moved, key=lambda r: (r.submit_time, r.job_id))


def build_scenario(cfg: ScenarioConfig, n_clusters: int | None = None) -> Scenario:
    """Roster plus jobs for a config.

    The roster is the configured (or bundled) cluster list cycled up to
    `n_clusters` (default: base size times replication_factor). Replicas get
    fresh ids and a clone of their template's trace with seeded arrival
    jitter.
    """
    entries = cfg.clusters or bundled_entries(cfg.horizon_seconds)
    n = n_clusters or len(entries) * cfg.replication_factor
    anchor = cfg.anchor
    base_records = []
    dropped = 0
    for i, e in enumerate(entries, start=1):
        recs, d = cluster_records(e, cfg, i)
        base_records.append(recs)
        dropped += d

    clusters, jobs = [], []
    ids = set()
    for k in range(n):
        b = k % len(entries)
        e = entries[b]
        replica = k // len(entries)
        cid = e.id if (e.id is not None and replica == 0) else k + 1
        if cid in ids:
            raise ValueError(f"duplicate cluster id {cid}")
        ids.add(cid)
        name = e.name if replica == 0 else f"{e.name}#{replica + 1}"
        price = e.price if e.price is not None else quote_price(e.speed, anchor)
        spec = ClusterSpec(cid, name, e.procs, e.speed, e.bandwidth, price)
        clusters.append(spec)
        recs = base_records[b]
        if replica:
            recs = _jitter(recs, cfg.replica_jitter, _subseed(cfg.seed, cid, replica))
        recs = clip_horizon(recs, cfg.horizon_seconds)
        js = synthesize_jobs(recs, spec, cfg.comm_fraction, cfg.budget_factor, cfg.deadline_factor)
        dropped += len(recs) - len(js)
        jobs.extend(js)
    return Scenario(clusters, jobs, dropped)


@dataclass
class RunResult:
    report: MetricsReport
    outcomes: list[JobOutcome]
    federation: Federation
    scenario: Scenario
    event_log: str | None = None
    protocol_trace: str | None = None


def run_scenario(cfg: ScenarioConfig, oft_percent: int | None = None, n_clusters: int | None = None,
                 scenario: Scenario | None = None, mode: Mode | None = None) -> RunResult:
    scenario = scenario or build_scenario(cfg, n_clusters)
    pct = cfg.oft_percent if oft_percent is None else oft_percent
    mode = mode or cfg.mode
    jobs = assign_preferences(scenario.jobs, pct if mode is Mode.ECONOMY else 0, cfg.seed)
    ev_buf = io.StringIO() if cfg.event_log else None
    pr_buf = io.StringIO() if cfg.protocol_trace else None
    fed = Federation(scenario.clusters, mode, Simulator(log=ev_buf), cfg.message_latency, trace=pr_buf)
    fed.submit(jobs)
    outcomes = fed.run()
    report = finalize(outcomes, fed.gfas, cfg.utilization_span, fed.directory.stats, scenario.ingestion_dropped)
    return RunResult(report, outcomes, fed, scenario,
                     ev_buf.getvalue() if ev_buf else None, pr_buf.getvalue() if pr_buf else None)


OUTCOME_COLUMNS = ("origin", "job_id", "user_id", "preference", "submit", "procs", "status", "host",
                   "start", "finish", "response_time", "cost_paid", "budget", "deadline", "attempts", "messages")


def emit_outcomes(outcomes: Iterable[JobOutcome], path: str) -> None:
    def f(x):
        return "" if x is None else f"{x:.6f}"

    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(OUTCOME_COLUMNS) + "\n")
        for o in outcomes:
            j = o.job
            row = [j.origin, j.id[1], j.user_id, j.preference.value, f(j.submit), j.procs, o.status.value,
                   "" if o.host is None else o.host, f(o.start), f(o.finish), f(o.response_time),
                   f(o.cost_paid), f(j.budget), f(j.deadline), o.attempts, o.messages]
            fh.write(",".join(str(x) for x in row) + "\n")


def run(cfg: ScenarioConfig, outdir: str) -> RunResult:
    os.makedirs(outdir, exist_ok=True)
    res = run_scenario(cfg)
    emit_csv(res.report, os.path.join(outdir, "report.csv"))
    emit_outcomes(res.outcomes, os.path.join(outdir, "outcomes.csv"))
    if res.event_log is not None:
        with open(os.path.join(outdir, "events.log"), "w", encoding="utf-8") as fh:
            fh.write(res.event_log)
    if res.protocol_trace is not None:
        with open(os.path.join(outdir, "protocol.trace"), "w", encoding="utf-8") as fh:
            fh.write(res.protocol_trace)
    return res


def _sweep_point(args) -> MetricsReport:
    cfg, pct, n = args
    return run_scenario(cfg, pct, n).report


def _map(fn, items, workers: int):
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def sweep(cfg: ScenarioConfig, outdir: str, profiles: Iterable[int] = SWEEP_PROFILES,
          workers: int = 1) -> dict[int, MetricsReport]:
    """Economy runs over OFT shares with one workload and seed; writes sweep.csv and dat/."""
    if cfg.mode is not Mode.ECONOMY:
        cfg = replace(cfg, mode=Mode.ECONOMY)
    profiles = list(profiles)
    reports = dict(zip(profiles, _map(_sweep_point, [(cfg, p, None) for p in profiles], workers)))
    os.makedirs(outdir, exist_ok=True)
    emit_sweep_csv(reports, os.path.join(outdir, "sweep.csv"))
    emit_sweep_dat(reports, os.path.join(outdir, "dat"))
    return reports


SCALE_COLUMNS = ("n", "oft_percent", "jobs", "total_messages", "msgs_per_job_min", "msgs_per_job_avg",
                 "msgs_per_job_max", "msgs_per_gfa_min", "msgs_per_gfa_avg", "msgs_per_gfa_max",
                 "entries_per_job_avg", "acceptance_pct")


def scale(cfg: ScenarioConfig, outdir: str, max_n: int = 50, profiles: Iterable[int] | None = None,
          workers: int = 1) -> dict[int, list[tuple[int, MetricsReport]]]:
    """Message complexity versus federation size, one CSV per OFT share."""
    if cfg.mode is not Mode.ECONOMY:
        cfg = replace(cfg, mode=Mode.ECONOMY)
    sizes = [n for n in cfg.scale_sizes if n <= max_n]
    profiles = list(profiles if profiles is not None else cfg.scale_profiles)
    points = [(cfg, p, n) for p in profiles for n in sizes]
    reports = _map(_scale_point, points, workers)
    os.makedirs(outdir, exist_ok=True)
    dat = os.path.join(outdir, "dat")
    os.makedirs(dat, exist_ok=True)
    out: dict[int, list] = {}
    for (_, p, n), (rep, entries) in zip(points, reports):
        out.setdefault(p, []).append((n, rep, entries))
    for p, rows in out.items():
        with open(os.path.join(outdir, f"scale_oft{p}.csv"), "w", newline="\n", encoding="utf-8") as fh:
            fh.write(",".join(SCALE_COLUMNS) + "\n")
            for n, rep, entries in rows:
                g = rep.glob
                vals = [n, p, g.jobs_total, g.total_messages, g.msgs_per_job_min, f"{g.msgs_per_job_avg:.6f}",
                        g.msgs_per_job_max, g.msgs_per_gfa_min, f"{g.msgs_per_gfa_avg:.6f}", g.msgs_per_gfa_max,
                        f"{entries:.6f}", f"{g.jobs_accepted_pct:.2f}"]
                fh.write(",".join(str(v) for v in vals) + "\n")
        ns = [n for n, _, _ in rows]
        for attr in ("msgs_per_job_min", "msgs_per_job_avg", "msgs_per_job_max",
                     "msgs_per_gfa_min", "msgs_per_gfa_avg", "msgs_per_gfa_max"):
            write_dat(os.path.join(dat, f"{attr}__oft{p}.dat"), ns,
                      [getattr(r.glob, attr) for _, r, _ in rows], f"n {attr} oft={p}")
    return {p: [(n, r) for n, r, _ in rows] for p, rows in out.items()}


def _scale_point(args):
    cfg, pct, n = args
    res = run_scenario(cfg, pct, n)
    entries = [entries_traversed(o.messages) for o in res.outcomes]
    return res.report, (sum(entries) / len(entries) if entries else 0.0)
