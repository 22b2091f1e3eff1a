"""Command-line entry point ``regc``.

Exit status: 0 when every check passed, 1 on a consistency violation or a
race where none is allowed, 2 on a usage error.
"""
from __future__ import annotations

import argparse
import sys

from .bench import BENCHMARKS, MODES, make_spec, run_bench
from .config import SimConfig, load_config
from .errors import RegcError, TraceIntegrityError, UsageError
from .litmus import MUTANT_RULE, load_corpus, mutant_kills, run_litmus_corpus
from .oracle import OK, RACE, check_regc
from .policies import PolicyKind
from .report import emit_report, report_row
from .trace import read_trace, write_trace

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _bench_args(rest: dict) -> dict:
    out = {}
    for k, v in rest.items():
        if k in ("bench", "n", "threads", "mode", "seed"):
            continue
        out[k] = v
    return out


def cmd_run(args) -> int:
    config, rest = load_config(args.config) if args.config else (SimConfig(), {})
    if args.policy is not None:
        config = config.replace(policy=PolicyKind.parse(args.policy))
    if args.trace_out is None and args.no_check:
        config = config.replace(record_trace=False)
    extra = _bench_args(rest)
    spec = make_spec(args.bench, args.n, args.threads, args.mode, args.iterations, **extra)
    status = EXIT_OK
    rows = []
    for seed in range(args.seed, args.seed + args.seeds):
        res = run_bench(spec, config, seed)
        rows.append(report_row(res, config.policy.value, seed))
        if args.trace_out:
            path = args.trace_out if args.seeds == 1 else f"{args.trace_out}.{seed}"
            write_trace(res.run.events, path)
        if not args.no_check:
            verdict = check_regc(res.run.events)
            if verdict.status != OK:
                print(f"seed {seed}: {verdict.describe()}", file=sys.stderr)
                status = EXIT_FAIL
        summary = {k: v for k, v in res.values.items() if isinstance(v, (int, float))}
        print(f"{spec.bench} seed={seed} policy={config.policy.value} "
              + " ".join(f"{k}={v!r}" for k, v in summary.items()), file=sys.stderr)
    text = emit_report(rows)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    return status


def cmd_litmus(args) -> int:
    programs = load_corpus(args.corpus)
    base = load_config(args.config)[0] if args.config else None
    failed = False
    for rep in run_litmus_corpus(programs, args.exhaustive, args.seeds, base):
        mark = "ok  " if rep.ok else "FAIL"
        print(f"{mark} {rep.name:28s} {rep.policy:9s} schedules={rep.schedules:5d} "
              f"outcomes={len(rep.outcomes):3d} racy_schedules={rep.races}")
        for f in rep.failures:
            print(f"     {f}")
        failed |= not rep.ok
    if args.mutants:
        for mutant in MUTANT_RULE:
            hits = [(p.name, mutant_kills(p, mutant, args.exhaustive, args.seeds, base)) for p in programs]
            killers = [name for name, found in hits if found]
            print(f"{'ok  ' if killers else 'FAIL'} mutant {mutant}: killed by {', '.join(killers) or 'nothing'}")
            failed |= not killers
    return EXIT_FAIL if failed else EXIT_OK


def cmd_check(args) -> int:
    events = read_trace(args.trace)
    verdict = check_regc(events)
    print(verdict.describe())
    if verdict.status == OK or (verdict.status == RACE and args.allow_races):
        return EXIT_OK
    return EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="regc", description="Regional-consistency DSM simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a benchmark and emit a CSV row per seed")
    r.add_argument("--bench", required=True, choices=BENCHMARKS)
    r.add_argument("--n", type=int, default=None, help="problem size (particles for md)")
    r.add_argument("--threads", type=int, default=4)
    r.add_argument("--policy", choices=[p.value for p in PolicyKind], default=None)
    r.add_argument("--mode", choices=MODES, default="lock")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--seeds", type=int, default=1, help="run this many consecutive seeds")
    r.add_argument("--iterations", type=int, default=None,
                   help="triad iterations, jacobi max iterations or md steps")
    r.add_argument("--config", default=None, help="key=value configuration file")
    r.add_argument("--out", default=None, help="CSV path (default stdout)")
    r.add_argument("--trace-out", default=None, help="write the event trace here")
    r.add_argument("--no-check", action="store_true", help="skip the trace oracle")
    r.set_defaults(fn=cmd_run)

    lt = sub.add_parser("litmus", help="run the litmus corpus under both policies")
    lt.add_argument("--corpus", default=None, help="directory of .litmus files (default: bundled)")
    lt.add_argument("--exhaustive", action="store_true", help="enumerate every schedule (DFS)")
    lt.add_argument("--seeds", type=int, default=1000, help="random schedules when not exhaustive")
    lt.add_argument("--mutants", action="store_true", help="also check the protocol mutants are killed")
    lt.add_argument("--config", default=None)
    lt.set_defaults(fn=cmd_litmus)

    c = sub.add_parser("check", help="check a recorded trace")
    c.add_argument("--trace", required=True)
    c.add_argument("--allow-races", action="store_true", help="exit 0 on a race-only verdict")
    c.set_defaults(fn=cmd_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, TraceIntegrityError, ValueError, OSError) as exc:
        print(f"regc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RegcError as exc:
        print(f"regc: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
