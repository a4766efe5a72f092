"""
Per-run aggregates and their CSV / .dat emission.

Averages "including rejected" charge each rejected job the cost and time it
would have had on its own origin cluster.
"""
from __future__ import annotations

import csv
import io
import os
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping

from .directory import DirectoryStats
from .federation import Gfa, JobOutcome

CSV_COLUMNS = (
    "scope", "cluster_id", "name", "utilization", "jobs_total", "jobs_accepted_pct",
    "jobs_rejected_pct", "processed_locally", "migrated_out", "remote_processed", "incentive",
    "local_messages", "remote_messages", "avg_response_excl_rejected", "avg_budget_excl_rejected",
    "avg_response_incl_rejected", "avg_budget_incl_rejected", "total_messages",
    "msgs_per_job_min", "msgs_per_job_avg", "msgs_per_job_max",
    "msgs_per_gfa_min", "msgs_per_gfa_avg", "msgs_per_gfa_max",
    "directory_queries", "directory_query_messages", "ingestion_dropped",
)
_PCT = {"jobs_accepted_pct", "jobs_rejected_pct"}


@dataclass
class ClusterMetrics:
    cluster_id: int
    name: str
    utilization: float = 0.0
    jobs_total: int = 0
    jobs_accepted: int = 0
    jobs_rejected: int = 0
    processed_locally: int = 0
    migrated_out: int = 0
    remote_processed: int = 0
    incentive: float = 0.0
    local_messages: int = 0
    remote_messages: int = 0
    avg_response_excl_rejected: float = 0.0
    avg_budget_excl_rejected: float = 0.0
    avg_response_incl_rejected: float = 0.0
    avg_budget_incl_rejected: float = 0.0

    @property
    def jobs_accepted_pct(self) -> float:
        return 100.0 * self.jobs_accepted / self.jobs_total if self.jobs_total else 0.0

    @property
    def jobs_rejected_pct(self) -> float:
        return 100.0 * self.jobs_rejected / self.jobs_total if self.jobs_total else 0.0


@dataclass
class GlobalMetrics:
    utilization: float = 0.0
    jobs_total: int = 0
    jobs_accepted: int = 0
    jobs_rejected: int = 0
    processed_locally: int = 0
    migrated_out: int = 0
    remote_processed: int = 0
    incentive: float = 0.0
    local_messages: int = 0
    remote_messages: int = 0
    avg_response_excl_rejected: float = 0.0
    avg_budget_excl_rejected: float = 0.0
    avg_response_incl_rejected: float = 0.0
    avg_budget_incl_rejected: float = 0.0
    total_messages: int = 0
    msgs_per_job_min: int = 0
    msgs_per_job_avg: float = 0.0
    msgs_per_job_max: int = 0
    msgs_per_gfa_min: int = 0
    msgs_per_gfa_avg: float = 0.0
    msgs_per_gfa_max: int = 0
    directory_queries: int = 0
    directory_query_messages: int = 0
    ingestion_dropped: int = 0
    span: tuple[float, float] = (0.0, 0.0)

    @property
    def jobs_accepted_pct(self) -> float:
        return 100.0 * self.jobs_accepted / self.jobs_total if self.jobs_total else 0.0

    @property
    def jobs_rejected_pct(self) -> float:
        return 100.0 * self.jobs_rejected / self.jobs_total if self.jobs_total else 0.0


@dataclass
class MetricsReport:
    clusters: list[ClusterMetrics] = field(default_factory=list)
    glob: GlobalMetrics = field(default_factory=GlobalMetrics)

    def cluster(self, name_or_id) -> ClusterMetrics:
        for c in self.clusters:
            if c.cluster_id == name_or_id or c.name == name_or_id:
                return c
        raise KeyError(name_or_id)


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs) if xs else 0.0


def _averages(outs: list[JobOutcome]) -> tuple[float, float, float, float]:
    acc = [o for o in outs if o.accepted]
    resp_ex = _mean([o.response_time for o in acc])
    cost_ex = _mean([o.cost_paid for o in acc])
    resp_in = _mean([o.response_time if o.accepted else o.origin_expected_time for o in outs])
    cost_in = _mean([o.cost_paid if o.accepted else o.origin_expected_cost for o in outs])
    return resp_ex, cost_ex, resp_in, cost_in


def default_span(outcomes: Iterable[JobOutcome]) -> tuple[float, float]:
    """Earliest submission to latest completion over the whole federation."""
    outcomes = list(outcomes)
    if not outcomes:
        return (0.0, 0.0)
    start = min(o.job.submit for o in outcomes)
    ends = [o.finish for o in outcomes if o.finish is not None]
    return (start, max(ends) if ends else start)


def finalize(outcomes: Iterable[JobOutcome], gfas: Mapping[int, Gfa],
             span: tuple[float, float] | None = None,
             directory_stats: DirectoryStats | None = None,
             ingestion_dropped: int = 0) -> MetricsReport:
    outcomes = list(outcomes)
    span = span or default_span(outcomes)
    rep = MetricsReport()
    by_origin: dict[int, list[JobOutcome]] = {cid: [] for cid in gfas}
    for o in outcomes:
        by_origin[o.job.origin].append(o)

    for cid in sorted(gfas):
        gfa = gfas[cid]
        cm = ClusterMetrics(cid, gfa.cluster.name)
        if span[1] > span[0]:
            cm.utilization = gfa.lrms.utilization(*span)
        mine = by_origin[cid]
        cm.jobs_total = len(mine)
        cm.jobs_accepted = sum(o.accepted for o in mine)
        cm.jobs_rejected = cm.jobs_total - cm.jobs_accepted
        cm.processed_locally = sum(o.accepted and o.host == cid for o in mine)
        cm.migrated_out = sum(o.remote for o in mine)
        cm.remote_processed = sum(o.remote and o.host == cid for o in outcomes)
        cm.incentive = gfa.incentive
        cm.local_messages = gfa.local_total
        cm.remote_messages = gfa.remote_total
        (cm.avg_response_excl_rejected, cm.avg_budget_excl_rejected,
         cm.avg_response_incl_rejected, cm.avg_budget_incl_rejected) = _averages(mine)
        rep.clusters.append(cm)

    g = rep.glob
    g.span = span
    g.utilization = _mean([c.utilization for c in rep.clusters])
    for name in ("jobs_total", "jobs_accepted", "jobs_rejected", "processed_locally",
                 "migrated_out", "remote_processed", "incentive", "local_messages", "remote_messages"):
        setattr(g, name, sum(getattr(c, name) for c in rep.clusters))
    (g.avg_response_excl_rejected, g.avg_budget_excl_rejected,
     g.avg_response_incl_rejected, g.avg_budget_incl_rejected) = _averages(outcomes)
    g.total_messages = g.local_messages
    per_job = [o.messages for o in outcomes]
    if per_job:
        g.msgs_per_job_min, g.msgs_per_job_max = min(per_job), max(per_job)
        g.msgs_per_job_avg = _mean(per_job)
    per_gfa = [gfa.local_total + gfa.remote_total for gfa in gfas.values()]
    if per_gfa:
        g.msgs_per_gfa_min, g.msgs_per_gfa_max = min(per_gfa), max(per_gfa)
        g.msgs_per_gfa_avg = _mean(per_gfa)
    if directory_stats is not None:
        g.directory_queries = directory_stats.query_count
        g.directory_query_messages = directory_stats.modeled_query_messages
    g.ingestion_dropped = ingestion_dropped
    return rep


def _cell(column: str, value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.2f}" if column in _PCT else f"{value:.6f}"
    return str(value)


def report_rows(report: MetricsReport) -> list[dict[str, str]]:
    rows = []
    for c in report.clusters:
        d = {col: "" for col in CSV_COLUMNS}
        d.update(scope="CLUSTER", cluster_id=str(c.cluster_id), name=c.name)
        for col in CSV_COLUMNS[3:17]:
            d[col] = _cell(col, getattr(c, col))
        rows.append(d)
    g = report.glob
    d = {col: "" for col in CSV_COLUMNS}
    d.update(scope="GLOBAL", cluster_id="", name="GLOBAL")
    for col in CSV_COLUMNS[3:]:
        d[col] = _cell(col, getattr(g, col))
    rows.append(d)
    return rows


def _open_out(destination):
    if isinstance(destination, (str, os.PathLike)):
        return open(destination, "w", newline="", encoding="utf-8"), True
    return destination, False


def emit_csv(report: MetricsReport, destination) -> None:
    """One row per cluster plus a GLOBAL row; header is `CSV_COLUMNS`."""
    fh, close = _open_out(destination)
    try:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(report_rows(report))
    finally:
        if close:
            fh.close()


def emit_sweep_csv(reports: Mapping[int, MetricsReport], destination) -> None:
    fh, close = _open_out(destination)
    try:
        w = csv.DictWriter(fh, fieldnames=("oft_percent",) + CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for pct in sorted(reports):
            for row in report_rows(reports[pct]):
                w.writerow({"oft_percent": str(pct), **row})
    finally:
        if close:
            fh.close()


def write_dat(path, xs: Iterable, ys: Iterable, header: str | None = None) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        for x, y in zip(xs, ys):
            fh.write(f"{x} {_cell('', float(y))}\n")


# metric attributes written as one .dat series per cluster (plus GLOBAL) by a sweep
SWEEP_SERIES = (
    "incentive", "remote_processed", "utilization", "migrated_out", "processed_locally",
    "jobs_rejected", "avg_response_excl_rejected", "avg_budget_excl_rejected",
    "avg_response_incl_rejected", "avg_budget_incl_rejected", "remote_messages", "local_messages",
)


def _slug(name: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in name)


def emit_sweep_dat(reports: Mapping[int, MetricsReport], outdir) -> list[str]:
    os.makedirs(outdir, exist_ok=True)
    pcts = sorted(reports)
    written = []
    first = reports[pcts[0]]
    for attr in SWEEP_SERIES:
        for c in first.clusters:
            path = os.path.join(outdir, f"{attr}__{_slug(c.name)}.dat")
            ys = [getattr(reports[p].cluster(c.cluster_id), attr) for p in pcts]
            write_dat(path, pcts, ys, f"oft_percent {attr} {c.name}")
            written.append(path)
        path = os.path.join(outdir, f"{attr}__GLOBAL.dat")
        write_dat(path, pcts, [getattr(reports[p].glob, attr) for p in pcts], f"oft_percent {attr} GLOBAL")
        written.append(path)
    path = os.path.join(outdir, "total_messages.dat")
    write_dat(path, pcts, [reports[p].glob.total_messages for p in pcts], "oft_percent total_messages")
    written.append(path)
    return written


def report_to_csv_text(report: MetricsReport) -> str:
    buf = io.StringIO()
    emit_csv(report, buf)
    return buf.getvalue()


def as_dict(report: MetricsReport) -> dict:
    return {"clusters": [asdict(c) for c in report.clusters], "global": asdict(report.glob)}
