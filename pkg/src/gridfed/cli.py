"""Command-line entry point: run, sweep, scale, validate.

Exit codes: 0 success, 1 configuration error, 2 I/O error.
Set GRIDFED_LOG (DEBUG, INFO, WARNING, ...) to change log verbosity.
"""
from __future__ import annotations

import argparse
import collections
import logging
import os
import sys

from .config import ConfigError, ScenarioConfig, load_config
from .experiment import SWEEP_PROFILES, run, scale, sweep
from .workload import parse_swf

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _load(path: str | None) -> ScenarioConfig:
    return load_config(path) if path else ScenarioConfig()


def cmd_run(args) -> int:
    cfg = _load(args.config)
    res = run(cfg, args.out)
    g = res.report.glob
    print(f"mode={cfg.mode.value} jobs={g.jobs_total} accepted={g.jobs_accepted_pct:.2f}% "
          f"messages={g.total_messages} -> {os.path.join(args.out, 'report.csv')}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args.config)
    reports = sweep(cfg, args.out, SWEEP_PROFILES, workers=args.workers)
    for pct, rep in reports.items():
        g = rep.glob
        print(f"oft={pct:3d}% accepted={g.jobs_accepted_pct:.2f}% messages={g.total_messages} "
              f"incentive={g.incentive:.2f}")
    return EXIT_OK


def cmd_scale(args) -> int:
    cfg = _load(args.config)
    profiles = [int(p) for p in args.profiles.split(",")] if args.profiles else None
    out = scale(cfg, args.out, max_n=args.max_n, profiles=profiles, workers=args.workers)
    for pct, rows in out.items():
        for n, rep in rows:
            g = rep.glob
            print(f"oft={pct:3d}% n={n:3d} msgs/job min={g.msgs_per_job_min} "
                  f"avg={g.msgs_per_job_avg:.2f} max={g.msgs_per_job_max}")
    return EXIT_OK


def cmd_validate(args) -> int:
    with open(args.trace, encoding="utf-8") as fh:
        parsed = parse_swf(fh)
    recs = parsed.records
    print(f"{args.trace}: {len(recs)} records, {len(parsed.dropped)} dropped, {len(parsed.errors)} malformed")
    for reason, n in sorted(collections.Counter(r for _, r in parsed.dropped).items()):
        print(f"  dropped ({reason}): {n}")
    for err in parsed.errors:
        print(f"  malformed {err}")
    if recs:
        for name in ("submit_time", "run_time", "procs"):
            vals = [getattr(r, name) for r in recs]
            print(f"  {name}: min={min(vals)} max={max(vals)}")
        users = {r.user_id for r in recs if r.user_id >= 0}
        print(f"  users: {len(users)}")
    print(f"warnings: {len(parsed.dropped) + len(parsed.errors)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridfed", description="Grid-Federation superscheduling simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario")
    r.add_argument("--config", help="scenario file (default: bundled scenario)")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="economy runs for OFT share 0,10,...,100")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("scale", help="message complexity versus federation size")
    c.add_argument("--config")
    c.add_argument("--max-n", type=int, default=50)
    c.add_argument("--profiles", help="comma separated OFT shares (default from config)")
    c.add_argument("--out", required=True)
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=cmd_scale)

    v = sub.add_parser("validate", help="lint an SWF trace")
    v.add_argument("trace")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("GRIDFED_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        path = getattr(e, "filename", None)
        print(f"io error: {path + ': ' if path else ''}{e.strerror or e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
