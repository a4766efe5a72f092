#!/usr/bin/env python3
"""Run the full experiment set on one scenario and print a short summary.

    python3 scripts/run_experiments.py --out results/
    python3 scripts/run_experiments.py --config configs/trace_example.cfg --only modes sweep

Families:
  modes    independent vs fastest-first vs economy, one report.csv each
  sweep    economy over OFT share 0..100 (sweep.csv, dat/)
  scale    message counts for 10..50 clusters (scale_oft*.csv, dat/)
  latency  economy with increasing per-message delay
"""
import argparse
import os
import sys
import time
from dataclasses import replace

from gridfed.config import ScenarioConfig, load_config
from gridfed.experiment import SWEEP_PROFILES, run, scale, sweep
from gridfed.federation import Mode

FAMILIES = ("modes", "sweep", "scale", "latency")


def do_modes(cfg, out):
    print("mode                        accepted%  migrated  messages")
    for mode in Mode:
        res = run(replace(cfg, mode=mode, event_log=False, protocol_trace=False), os.path.join(out, mode.value))
        g = res.report.glob
        print(f"{mode.value:27s} {g.jobs_accepted_pct:9.2f} {g.migrated_out:9d} {g.total_messages:9d}")


def do_sweep(cfg, out, workers):
    reps = sweep(cfg, out, SWEEP_PROFILES, workers=workers)
    print("oft%  accepted%  incentive        messages  resp_excl")
    for p, rep in reps.items():
        g = rep.glob
        print(f"{p:4d} {g.jobs_accepted_pct:10.2f} {g.incentive:14.2f} {g.total_messages:9d} "
              f"{g.avg_response_excl_rejected:10.1f}")


def do_scale(cfg, out, max_n, workers):
    res = scale(cfg, out, max_n=max_n, workers=workers)
    for p, rows in res.items():
        print(f"oft={p}%: " + "  ".join(f"n={n}:{r.glob.msgs_per_job_avg:.2f}" for n, r in rows))


def do_latency(cfg, out):
    print("latency_s  accepted%  messages")
    for lat in (0, 1, 10, 60, 300):
        res = run(replace(cfg, mode=Mode.ECONOMY, message_latency=float(lat), oft_percent=50,
                          event_log=False, protocol_trace=False), os.path.join(out, f"lat{lat}"))
        g = res.report.glob
        print(f"{lat:9d} {g.jobs_accepted_pct:10.2f} {g.total_messages:9d}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", help="scenario file (default: bundled scenario)")
    ap.add_argument("--out", default="results")
    ap.add_argument("--only", nargs="+", choices=FAMILIES, default=list(FAMILIES))
    ap.add_argument("--max-n", type=int, default=50)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    cfg = load_config(args.config) if args.config else ScenarioConfig()
    for fam in args.only:
        t0 = time.perf_counter()
        print(f"== {fam}")
        out = os.path.join(args.out, fam)
        if fam == "modes":
            do_modes(cfg, out)
        elif fam == "sweep":
            do_sweep(cfg, out, args.workers)
        elif fam == "scale":
            do_scale(cfg, out, args.max_n, args.workers)
        else:
            do_latency(cfg, out)
        print(f"   ({time.perf_counter() - t0:.1f}s, written to {out})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
