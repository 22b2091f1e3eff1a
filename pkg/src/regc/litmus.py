"""Litmus programs: parser, brute-force SC enumerator and the corpus runner.

File format, one program per file::

    name: rule2-basic
    class: rule2
    racy: no                 # no | yes | maybe
    P0: acq m | st c 1 | rel m
    P1: acq m | ld c r0 | rel m
    sc: r0=0 ; r0=1          # optional; checked against the enumerator
    forbid: r0=1 r1=0        # outcome that must never be observed
    witness: r0=1            # outcome that must be observed under each policy
    kills: drop_rule2        # mutant this program must detect
    discriminates: ScC       # model this program tells apart (informational)
    unresolved: text         # expectation recorded but not asserted

Ops: ``st <var> <int>``, ``ld <var> <reg>``, ``acq <lock>``, ``rel <lock>``,
``bar <barrier>``. Every variable is one 8-byte word; all live on page 0 of
a single allocation. Barriers include every processor of the program.
Lines starting with ``#`` are comments.
"""
from __future__ import annotations

import functools
import time
from dataclasses import dataclass, field
from pathlib import Path

from .config import SimConfig
from .errors import UsageError
from .oracle import RACE, VIOLATION, check_regc
from .policies import PolicyKind
from .scheduler import RandomScheduler, explore
from .sim import Simulator

MAX_PROCS = 3
MAX_OPS = 6
MAX_WORDS = 8
MUTANT_RULE = {"drop_rule1": "rule1", "drop_rule2": "rule2", "drop_rule3": "rule3"}


@dataclass(frozen=True)
class Op:
    kind: str  # st | ld | acq | rel | bar
    target: str
    arg: str | int | None = None


@dataclass
class LitmusProgram:
    name: str
    procs: list[list[Op]]
    cls: str = "mixed"
    racy: str = "no"
    sc: list[dict[str, int]] | None = None
    forbid: list[dict[str, int]] = field(default_factory=list)
    witness: list[dict[str, int]] = field(default_factory=list)
    kills: list[str] = field(default_factory=list)
    discriminates: list[str] = field(default_factory=list)
    unresolved: list[str] = field(default_factory=list)

    @property
    def variables(self) -> list[str]:
        seen: list[str] = []
        for ops in self.procs:
            for op in ops:
                if op.kind in ("st", "ld") and op.target not in seen:
                    seen.append(op.target)
        return seen

    @property
    def registers(self) -> list[str]:
        return [op.arg for ops in self.procs for op in ops if op.kind == "ld"]

    def within_bounds(self) -> bool:
        return (len(self.procs) <= MAX_PROCS and all(len(o) <= MAX_OPS for o in self.procs)
                and len(self.variables) <= MAX_WORDS)


def _condition(text: str) -> dict[str, int]:
    out = {}
    for tok in text.split():
        k, _, v = tok.partition("=")
        if not _:
            raise UsageError(f"bad outcome term {tok!r}")
        out[k] = int(v)
    return out


def _op(text: str) -> Op:
    parts = text.split()
    if not parts:
        raise UsageError("empty op")
    kind = parts[0]
    if kind == "st" and len(parts) == 3:
        return Op("st", parts[1], int(parts[2]))
    if kind == "ld" and len(parts) == 3:
        return Op("ld", parts[1], parts[2])
    if kind in ("acq", "rel", "bar") and len(parts) == 2:
        return Op(kind, parts[1])
    raise UsageError(f"cannot parse litmus op {text!r}")


def parse_litmus(text: str, name: str = "anon") -> LitmusProgram:
    procs: dict[int, list[Op]] = {}
    prog = LitmusProgram(name, [])
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(":")
        if not _:
            raise UsageError(f"{name}: expected 'key: value', got {line!r}")
        key, rest = key.strip(), rest.strip()
        if key.startswith("P") and key[1:].isdigit():
            procs[int(key[1:])] = [_op(t) for t in rest.split("|") if t.strip()]
        elif key == "name":
            prog.name = rest
        elif key == "class":
            prog.cls = rest
        elif key == "racy":
            if rest not in ("yes", "no", "maybe"):
                raise UsageError(f"{name}: racy must be yes, no or maybe")
            prog.racy = rest
        elif key == "sc":
            prog.sc = [_condition(t) for t in rest.split(";") if t.strip()]
        elif key == "forbid":
            prog.forbid.append(_condition(rest))
        elif key == "witness":
            prog.witness.append(_condition(rest))
        elif key == "kills":
            prog.kills.extend(rest.split())
        elif key == "discriminates":
            prog.discriminates.extend(rest.split())
        elif key == "unresolved":
            prog.unresolved.append(rest)
        else:
            raise UsageError(f"{name}: unknown key {key!r}")
    if sorted(procs) != list(range(len(procs))) or not procs:
        raise UsageError(f"{name}: processors must be numbered P0..Pn")
    prog.procs = [procs[i] for i in range(len(procs))]
    regs = prog.registers
    if len(regs) != len(set(regs)):
        raise UsageError(f"{name}: register names must be unique")
    for m in sorted(set(prog.kills) - MUTANT_RULE.keys()):
        raise UsageError(f"{name}: unknown mutant {m!r}")
    return prog


def load_corpus(directory=None) -> list[LitmusProgram]:
    d = Path(directory) if directory is not None else Path(__file__).parent / "corpus"
    return [parse_litmus(f.read_text(), f.stem) for f in sorted(d.glob("*.litmus"))]


# -- sequential consistency reference ----------------------------------------


def sc_outcomes(prog: LitmusProgram) -> set[tuple]:
    """All final states reachable by interleaving whole operations."""
    if not prog.within_bounds():
        raise UsageError(f"{prog.name}: exceeds litmus bounds for enumeration")
    names = prog.variables
    regs = sorted(prog.registers)
    vidx = {v: i for i, v in enumerate(names)}
    ridx = {r: i for i, r in enumerate(regs)}
    procs = prog.procs
    n = len(procs)

    @functools.lru_cache(maxsize=None)
    def go(pcs, mem, rv, held, arrived):
        out = set()
        moved = False
        for i in range(n):
            if pcs[i] >= len(procs[i]) or arrived[i]:
                continue
            op = procs[i][pcs[i]]
            npcs = pcs[:i] + (pcs[i] + 1,) + pcs[i + 1:]
            if op.kind == "st":
                m = list(mem)
                m[vidx[op.target]] = op.arg
                out |= go(npcs, tuple(m), rv, held, arrived)
            elif op.kind == "ld":
                r = list(rv)
                r[ridx[op.arg]] = mem[vidx[op.target]]
                out |= go(npcs, mem, tuple(r), held, arrived)
            elif op.kind == "acq":
                if any(l == op.target for l, _ in held):
                    continue
                out |= go(npcs, mem, rv, tuple(sorted(held + ((op.target, i),))), arrived)
            elif op.kind == "rel":
                out |= go(npcs, mem, rv, tuple(h for h in held if h != (op.target, i)), arrived)
            else:
                arr = arrived[:i] + (True,) + arrived[i + 1:]
                if all(arr):
                    # last arrival: everyone passes the barrier
                    allp = tuple(pc + 1 for pc in pcs)
                    out |= go(allp, mem, rv, held, (False,) * n)
                else:
                    out |= go(pcs, mem, rv, held, arr)
            moved = True
        if not moved:
            if all(pcs[i] >= len(procs[i]) for i in range(n)):
                out.add(_outcome(dict(zip(regs, rv)), dict(zip(names, mem))))
            # otherwise a deadlock: contributes no final state
        return frozenset(out)

    return set(go((0,) * n, (0,) * len(names), (0,) * len(regs), (), (False,) * n))


def _outcome(regs: dict, mem: dict) -> tuple:
    return tuple(sorted(regs.items())) + tuple(sorted(mem.items()))


def matches(outcome: tuple, cond: dict[str, int]) -> bool:
    d = dict(outcome)
    return all(d.get(k) == v for k, v in cond.items())


def project(outcomes, keys) -> set[tuple]:
    keys = sorted(keys)
    return {tuple((k, dict(o).get(k)) for k in keys) for o in outcomes}


# -- engine execution ---------------------------------------------------------


def build(prog: LitmusProgram, config: SimConfig, scheduler) -> tuple[Simulator, dict, dict]:
    sim = Simulator(config, scheduler)
    base = sim.alloc(8 * max(1, len(prog.variables))).base
    addr = {v: base + 8 * i for i, v in enumerate(prog.variables)}
    regs: dict[str, int] = {}
    parties = frozenset(range(len(prog.procs)))

    def body(ctx, ops):
        for op in ops:
            if op.kind == "st":
                yield ctx.store(addr[op.target], int(op.arg).to_bytes(8, "little", signed=True))
            elif op.kind == "ld":
                raw = yield ctx.load(addr[op.target], 8)
                regs[op.arg] = int.from_bytes(raw, "little", signed=True)
            elif op.kind == "acq":
                yield ctx.lock(op.target)
            elif op.kind == "rel":
                yield ctx.unlock(op.target)
            else:
                yield ctx.barrier(op.target, parties)

    for ops in prog.procs:
        sim.spawn(body, ops)
    return sim, addr, regs


@dataclass
class LitmusRun:
    outcome: tuple
    verdict: object
    trace: str


def run_once(prog: LitmusProgram, config: SimConfig, scheduler) -> LitmusRun:
    sim, addr, regs = build(prog, config, scheduler)
    res = sim.run()
    mem = {v: int.from_bytes(res.memory[a:a + 8], "little", signed=True) for v, a in addr.items()}
    full = {r: regs.get(r, 0) for r in prog.registers}
    return LitmusRun(_outcome(full, mem), check_regc(res.events), res.trace_text())


def runs(prog: LitmusProgram, config: SimConfig, exhaustive: bool = True, seeds: int = 1000,
         limit: int | None = None):
    """Every DFS schedule when ``exhaustive``, else ``seeds`` random ones."""
    if exhaustive:
        yield from explore(lambda s: run_once(prog, config, s), limit)
    else:
        for seed in range(seeds):
            yield run_once(prog, config, RandomScheduler(seed))


@dataclass
class ProgramReport:
    name: str
    policy: str
    schedules: int = 0
    outcomes: set = field(default_factory=set)
    drf_outcomes: set = field(default_factory=set)
    violations: list[str] = field(default_factory=list)
    races: int = 0
    failures: list[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures


def check_program(prog: LitmusProgram, policy, exhaustive: bool = True, seeds: int = 1000,
                  base: SimConfig | None = None) -> ProgramReport:
    policy = PolicyKind.parse(policy)
    cfg = (base or SimConfig()).replace(policy=policy, mutant=None)
    rep = ProgramReport(prog.name, policy.value)
    t0 = time.perf_counter()
    bounded = exhaustive and prog.within_bounds()
    sc = sc_outcomes(prog) if prog.within_bounds() else None
    first_bad = None
    for run in runs(prog, cfg, bounded, seeds):
        rep.schedules += 1
        rep.outcomes.add(run.outcome)
        v = run.verdict
        if v.status == VIOLATION:
            rep.violations.append(v.describe())
            first_bad = first_bad or run.trace
        elif v.status == RACE:
            rep.races += 1
        else:
            rep.drf_outcomes.add(run.outcome)
    f = rep.failures
    if rep.violations:
        f.append(f"{len(rep.violations)} violating schedule(s): {rep.violations[0]}\n{first_bad}")
    if prog.racy == "no" and rep.races:
        f.append(f"{rep.races} schedule(s) report a race in a program marked race-free")
    if prog.racy == "yes" and not rep.races:
        f.append("no schedule reports a race in a program marked racy")
    if sc is not None:
        extra = rep.drf_outcomes - sc
        if extra:
            f.append(f"race-free outcomes outside SC: {sorted(extra)}")
        if prog.sc is not None:
            keys = set().union(*(c.keys() for c in prog.sc)) if prog.sc else set()
            want = {tuple(sorted(c.items())) for c in prog.sc}
            if project(sc, keys) != want:
                f.append(f"SC enumeration {sorted(project(sc, keys))} differs from declared {sorted(want)}")
    for cond in prog.forbid:
        if any(matches(o, cond) for o in rep.outcomes):
            f.append(f"forbidden outcome observed: {cond}")
    for cond in prog.witness:
        if not any(matches(o, cond) for o in rep.outcomes):
            f.append(f"witness outcome never observed: {cond}")
    rep.seconds = time.perf_counter() - t0
    return rep


def mutant_kills(prog: LitmusProgram, mutant: str, exhaustive: bool = True, seeds: int = 1000,
                 base: SimConfig | None = None) -> list[str]:
    """Rule-attributed violations the mutant produces on ``prog`` (any policy)."""
    want = MUTANT_RULE[mutant]
    found = []
    for policy in PolicyKind:
        cfg = (base or SimConfig()).replace(policy=policy, mutant=mutant)
        for run in runs(prog, cfg, exhaustive and prog.within_bounds(), seeds):
            v = run.verdict
            if v.status == VIOLATION and v.rule == want:
                found.append(f"{policy.value}: {v.describe()}")
                break
    return found


def run_litmus_corpus(programs, exhaustive: bool = True, seeds: int = 1000,
                      base: SimConfig | None = None) -> list[ProgramReport]:
    out = []
    for prog in programs:
        for policy in PolicyKind:
            out.append(check_program(prog, policy, exhaustive, seeds, base))
    return out
