#!/usr/bin/env python3
"""Thread-scaling sweep: one CSV row per (benchmark, threads, policy, seed).

    python3 scripts/scaling.py --bench jacobi --threads 1 2 4 8 --out scaling.csv
"""
import argparse
import sys

from regc.bench import make_spec, run_bench
from regc.config import SimConfig
from regc.report import emit_report, report_row


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bench", default="jacobi", choices=["triad", "jacobi", "md"])
    ap.add_argument("--n", type=int, default=None)
    ap.add_argument("--threads", type=int, nargs="+", default=[1, 2, 4, 8])
    ap.add_argument("--policies", nargs="+", default=["page", "finegrain"])
    ap.add_argument("--mode", default="lock")
    ap.add_argument("--iterations", type=int, default=None)
    ap.add_argument("--seeds", type=int, default=1)
    ap.add_argument("--out", default="-")
    args = ap.parse_args(argv)

    rows = []
    for t in args.threads:
        spec = make_spec(args.bench, args.n, t, args.mode, args.iterations)
        for policy in args.policies:
            cfg = SimConfig(policy=policy, record_trace=False)
            for seed in range(args.seeds):
                res = run_bench(spec, cfg, seed)
                rows.append(report_row(res, policy, seed))
                print(f"threads={t} policy={policy} seed={seed} "
                      f"time={res.metrics.simulated_time:.0f}", file=sys.stderr)
    text = emit_report(rows)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


if __name__ == "__main__":
    main()
