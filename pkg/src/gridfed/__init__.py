"""Discrete-event simulator of economy-driven superscheduling across federated clusters."""
from .economy import ClusterSpec, PricingAnchor, exec_cost, exec_time, feasible, quote_price, reference_roster
from .federation import Federation, JobOutcome, Mode
from .workload import JobSpec, Preference, SynthParams, TraceRecord

__all__ = [
    "ClusterSpec", "PricingAnchor", "exec_cost", "exec_time", "feasible", "quote_price", "reference_roster",
    "Federation", "JobOutcome", "Mode", "JobSpec", "Preference", "SynthParams", "TraceRecord",
]
