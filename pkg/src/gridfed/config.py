"""
Scenario configuration.

Grammar (line oriented, UTF-8):

    file     := { line }
    line     := blank | comment | section | pair
    comment  := ws* '#' any*
    section  := ws* '[cluster]' ws*
    pair     := ws* key ws* '=' ws* value ws*      (value may contain spaces)
    key      := [a-z_][a-z0-9_]*

Pairs before the first ``[cluster]`` header are scenario keys; pairs after a
header belong to that cluster. A ``#`` only starts a comment at the start of
a line. Booleans are ``true``/``false``; lists are comma separated. When no
cluster section is present the bundled eight-cluster roster and synthetic
workload are used.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from typing import Any

from .economy import PricingAnchor
from .federation import Mode
from .workload import TWO_DAYS, SynthParams


class ConfigError(ValueError):
    pass


@dataclass
class ClusterEntry:
    name: str
    procs: int
    speed: float
    bandwidth: float
    price: float | None = None  # None: priced from speed
    trace: str | None = None
    synth: SynthParams | None = None
    id: int | None = None


@dataclass
class ScenarioConfig:
    mode: Mode = Mode.ECONOMY
    clusters: list[ClusterEntry] = field(default_factory=list)
    horizon_seconds: float = TWO_DAYS
    comm_fraction: float = 0.10
    budget_factor: float = 2.0
    deadline_factor: float = 2.0
    access_price: float = 5.3
    fastest_speed: float = 930.0
    oft_percent: int = 0
    replication_factor: int = 1
    message_latency: float = 0.0
    replica_jitter: float = 1800.0
    seed: int = 42
    utilization_span: tuple[float, float] | None = None
    scale_profiles: tuple[int, ...] = (0, 100)
    scale_sizes: tuple[int, ...] = (10, 20, 30, 40, 50)
    event_log: bool = False
    protocol_trace: bool = False
    base_dir: str = "."

    @property
    def anchor(self) -> PricingAnchor:
        return PricingAnchor(self.access_price, self.fastest_speed)

    def validate(self) -> "ScenarioConfig":
        checks = [
            ("horizon_seconds", self.horizon_seconds > 0),
            ("comm_fraction", 0 <= self.comm_fraction < 1),
            ("budget_factor", self.budget_factor > 0),
            ("deadline_factor", self.deadline_factor > 0),
            ("access_price", self.access_price > 0),
            ("fastest_speed", self.fastest_speed > 0),
            ("oft_percent", 0 <= self.oft_percent <= 100),
            ("replication_factor", self.replication_factor >= 1),
            ("message_latency", self.message_latency >= 0),
            ("replica_jitter", self.replica_jitter >= 0),
            ("scale_profiles", all(0 <= p <= 100 for p in self.scale_profiles)),
            ("scale_sizes", all(n >= 1 for n in self.scale_sizes)),
        ]
        bad = [name for name, ok in checks if not ok]
        if self.utilization_span is not None and not self.utilization_span[1] > self.utilization_span[0]:
            bad.append("utilization_span")
        if bad:
            raise ConfigError("invalid value for: " + ", ".join(bad))
        for i, c in enumerate(self.clusters, start=1):
            if (c.trace is None) == (c.synth is None):
                raise ConfigError(f"[cluster] #{i} ({c.name}): give exactly one of trace or synthetic parameters")
            if c.procs < 1 or c.speed <= 0 or c.bandwidth <= 0 or (c.price is not None and c.price < 0):
                raise ConfigError(f"[cluster] #{i} ({c.name}): procs, speed, bandwidth or price out of range")
        return self


def _bool(v: str) -> bool:
    v = v.lower()
    if v in ("true", "yes", "1"):
        return True
    if v in ("false", "no", "0"):
        return False
    raise ValueError(v)


def _ints(v: str) -> tuple[int, ...]:
    return tuple(int(x) for x in v.split(",") if x.strip())


def _span(v: str) -> tuple[float, float] | None:
    if v.lower() in ("auto", "none", ""):
        return None
    a, b = v.split(",")
    return (float(a), float(b))


_SCENARIO_KEYS = {
    "mode": Mode,
    "horizon_seconds": float,
    "comm_fraction": float,
    "budget_factor": float,
    "deadline_factor": float,
    "access_price": float,
    "fastest_speed": float,
    "oft_percent": int,
    "replication_factor": int,
    "message_latency": float,
    "replica_jitter": float,
    "seed": int,
    "utilization_span": _span,
    "scale_profiles": _ints,
    "scale_sizes": _ints,
    "event_log": _bool,
    "protocol_trace": _bool,
}
_CLUSTER_KEYS = {
    "id": int, "name": str, "procs": int, "speed": float, "bandwidth": float, "price": float, "trace": str,
}
_SYNTH_KEYS = {f.name: f.type for f in fields(SynthParams)}
_SYNTH_CAST = {"arrival_rate": float, "runtime_log_mean": float, "runtime_log_sigma": float,
               "max_proc_power": int, "job_count": int, "seed": int, "users": int}


def _cluster(raw: dict[str, tuple[int, str]], index: int) -> ClusterEntry:
    def get(key, cast, default: Any = ConfigError):
        if key not in raw:
            if default is ConfigError:
                raise ConfigError(f"[cluster] #{index}: missing {key}")
            return default
        lineno, v = raw[key]
        try:
            return cast(v)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key}: {v!r}") from None

    unknown = set(raw) - set(_CLUSTER_KEYS) - set(_SYNTH_KEYS)
    if unknown:
        k = sorted(unknown)[0]
        raise ConfigError(f"line {raw[k][0]}: unknown cluster key {k}")
    synth = None
    if any(k in raw for k in _SYNTH_KEYS):
        kw = {k: get(k, _SYNTH_CAST[k]) for k in ("arrival_rate", "runtime_log_mean", "runtime_log_sigma",
                                                   "max_proc_power", "job_count")}
        kw["seed"] = get("seed", int, -1)
        kw["users"] = get("users", int, 0)
        try:
            synth = SynthParams(**kw)
        except ValueError as e:
            raise ConfigError(f"[cluster] #{index}: {e}") from None
    return ClusterEntry(
        name=get("name", str, f"cluster{index}"),
        procs=get("procs", int),
        speed=get("speed", float),
        bandwidth=get("bandwidth", float),
        price=get("price", float, None),
        trace=get("trace", str, None),
        synth=synth,
        id=get("id", int, None),
    )


def parse_config(text: str, base_dir: str = ".") -> ScenarioConfig:
    cfg = ScenarioConfig(base_dir=base_dir)
    sections: list[dict[str, tuple[int, str]]] = []
    current: dict[str, tuple[int, str]] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if line != "[cluster]":
                raise ConfigError(f"line {lineno}: unknown section {line}")
            current = {}
            sections.append(current)
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        if current is not None:
            if key in current:
                raise ConfigError(f"line {lineno}: duplicate key {key}")
            current[key] = (lineno, value)
            continue
        if key not in _SCENARIO_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key}")
        try:
            setattr(cfg, key, _SCENARIO_KEYS[key](value))
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    cfg.clusters = [_cluster(s, i) for i, s in enumerate(sections, start=1)]
    return cfg.validate()


def load_config(path: str) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))
