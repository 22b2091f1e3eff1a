#!/usr/bin/env python3
"""Jacobi under both coherence policies and both accumulation modes.

Prints a small table of the data-movement counters and the residual for
each combination, averaged over a few seeds.
"""
import argparse
from statistics import mean

from regc.bench import make_spec, run_bench
from regc.config import SimConfig

FIELDS = ["lock_messages", "consistency_bytes", "bytes_on_wire", "page_fetches", "simulated_time"]


def main(argv=None):
    ap = argparse.ArgumentParser(description="Jacobi policy/mode comparison")
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--iterations", type=int, default=None)
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args(argv)

    print(f"{'policy':10s} {'mode':10s} " + " ".join(f"{f:>18s}" for f in FIELDS) + f" {'residual':>12s}")
    for policy in ("page", "finegrain"):
        for mode in ("lock", "reduction"):
            spec = make_spec("jacobi", args.n, args.threads, mode, args.iterations)
            results = [run_bench(spec, SimConfig(policy=policy, record_trace=False), s)
                       for s in range(args.seeds)]
            cells = [mean(getattr(r.metrics, f) for r in results) for f in FIELDS]
            resid = results[0].values["residual"]
            print(f"{policy:10s} {mode:10s} " + " ".join(f"{v:18.1f}" for v in cells) + f" {resid:12.4e}")


if __name__ == "__main__":
    main()
