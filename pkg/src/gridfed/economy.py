"""
Closed-form economics of the federation.

Every quantity here is a pure function of static cluster descriptions and a
job's requirements: data transferred, execution time, execution cost, the
static quote a cluster advertises, and the QoS feasibility screen used by
admission control.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable


class InsufficientProcessors(ValueError):
    pass


@dataclass(frozen=True)
class ClusterSpec:
    id: int
    name: str
    procs: int
    speed: float  # MIPS per processor
    bandwidth: float  # Gb/s
    price: float  # Grid Dollars per compute-second

    def __post_init__(self):
        if self.procs < 1:
            raise ValueError(f"cluster {self.name!r}: procs must be >= 1")
        if self.speed <= 0 or self.bandwidth <= 0:
            raise ValueError(f"cluster {self.name!r}: speed and bandwidth must be > 0")
        if self.price < 0:
            raise ValueError(f"cluster {self.name!r}: price must be >= 0")


@dataclass(frozen=True)
class PricingAnchor:
    access_price: float = 5.3
    fastest_speed: float = 930.0

    def __post_init__(self):
        if self.access_price <= 0 or self.fastest_speed <= 0:
            raise ValueError("pricing anchor values must be > 0")


# (name, procs, MIPS, Gb/s, published quote)
REFERENCE_ROSTER = (
    ("CTC SP2", 512, 850, 2.0, 4.84),
    ("KTH SP2", 100, 900, 1.6, 5.12),
    ("LANL CM5", 1024, 700, 1.0, 3.98),
    ("LANL Origin", 2048, 630, 1.6, 3.59),
    ("NASA iPSC", 128, 930, 4.0, 5.3),
    ("SDSC Par96", 416, 710, 1.0, 4.04),
    ("SDSC Blue", 1152, 730, 2.0, 4.16),
    ("SDSC SP2", 128, 920, 4.0, 5.24),
)


def quote_price(speed: float, anchor: PricingAnchor) -> float:
    """Static access price of a cluster, linear in processor speed."""
    if speed <= 0:
        raise ValueError("speed must be > 0")
    return anchor.access_price / anchor.fastest_speed * speed


def reference_roster(anchor: PricingAnchor | None = None, published: bool = False) -> list[ClusterSpec]:
    """The eight archive clusters, ids 1..8 in table order.

    Prices come from `quote_price` unless ``published`` is set, in which case
    the rounded published quotes are used verbatim.
    """
    anchor = anchor or PricingAnchor()
    roster = []
    for i, (name, procs, speed, bw, quote) in enumerate(REFERENCE_ROSTER, start=1):
        price = quote if published else quote_price(speed, anchor)
        roster.append(ClusterSpec(i, name, procs, float(speed), bw, price))
    return roster


def reprice(clusters: Iterable[ClusterSpec], anchor: PricingAnchor) -> list[ClusterSpec]:
    return [replace(c, price=quote_price(c.speed, anchor)) for c in clusters]


def transfer_volume(job, origin: ClusterSpec) -> float:
    """Gigabits moved during execution; fixed by the origin's interconnect."""
    return job.comm_overhead * origin.bandwidth


def compute_time(job, host: ClusterSpec) -> float:
    if host.procs < job.procs:
        raise InsufficientProcessors(
            f"job {job.id} needs {job.procs} procs, {host.name} has {host.procs}")
    return job.length / (host.speed * job.procs)


def exec_time(job, origin: ClusterSpec, host: ClusterSpec) -> float:
    """Wall time of `job` on `host`: compute part plus rescaled communication."""
    return compute_time(job, host) + transfer_volume(job, origin) / host.bandwidth


def exec_cost(job, host: ClusterSpec) -> float:
    """Price of running `job` on `host`. Communication time is not billed."""
    return host.price * compute_time(job, host)


class Feasibility(enum.Enum):
    OK = "ok"
    TOO_SMALL = "too_small"
    BUDGET_VIOLATED = "budget_violated"
    DEADLINE_VIOLATED = "deadline_violated"


def feasible(job, origin: ClusterSpec, host: ClusterSpec, est_completion: float,
             check_budget: bool = True) -> Feasibility:
    # checks in this order: processors, budget, deadline
    if host.procs < job.procs:
        return Feasibility.TOO_SMALL
    if check_budget and exec_cost(job, host) > job.budget:
        return Feasibility.BUDGET_VIOLATED
    if est_completion > job.submit + job.deadline:
        return Feasibility.DEADLINE_VIOLATED
    return Feasibility.OK
