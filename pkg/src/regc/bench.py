"""The three desk-scale workloads: STREAM TRIAD, Jacobi and molecular dynamics.

Each run has a main thread (processor 0) that initializes shared arrays,
forks ``threads`` workers (processors 1..threads), joins them and reads the
results back. Workers own contiguous blocks and synchronize with barriers;
shared accumulators use either a lock ("lock" mode) or the barrier
reduction ("reduction" mode).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import SimConfig
from .errors import UsageError
from .metrics import SimMetrics
from .reference import JacobiParams, MDParams, block_bounds, jacobi_rhs, md_initial, triad_initial
from .scheduler import RandomScheduler
from .sim import RunResult, Simulator

BENCHMARKS = ("triad", "jacobi", "md")
MODES = ("lock", "reduction")
F8 = 8


def fold(values) -> float:
    """Left-to-right sum, the order the scalar references use."""
    acc = 0.0
    for v in np.asarray(values, dtype=np.float64).ravel().tolist():
        acc = acc + v
    return acc


@dataclass
class TriadParams:
    n: int = 1024
    iterations: int = 400
    alpha: float = 3.0


@dataclass
class BenchSpec:
    bench: str
    threads: int = 4
    mode: str = "lock"
    params: object = None

    def __post_init__(self):
        if self.bench not in BENCHMARKS:
            raise UsageError(f"unknown benchmark {self.bench!r}")
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.threads < 1:
            raise UsageError("threads must be >= 1")
        if self.params is None:
            self.params = {"triad": TriadParams, "jacobi": JacobiParams, "md": MDParams}[self.bench]()

    @property
    def size(self) -> int:
        p = self.params
        return p.particles if self.bench == "md" else p.n


@dataclass
class BenchResult:
    spec: BenchSpec
    metrics: SimMetrics
    values: dict
    run: RunResult = field(repr=False)

    @property
    def memory(self) -> bytes:
        return self.run.memory


def make_spec(bench: str, n: int | None = None, threads: int = 4, mode: str = "lock",
              iterations: int | None = None, **extra) -> BenchSpec:
    """Build a spec from flat keyword settings (as used by the CLI)."""
    if bench == "triad":
        p = TriadParams()
    elif bench == "jacobi":
        p = JacobiParams()
    elif bench == "md":
        p = MDParams()
    else:
        raise UsageError(f"unknown benchmark {bench!r}")
    kw = dict(extra)
    if n is not None:
        kw["particles" if bench == "md" else "n"] = n
    if iterations is not None:
        kw[{"triad": "iterations", "jacobi": "max_iters", "md": "steps"}[bench]] = iterations
    names = set(type(p).__dataclass_fields__)
    unknown = set(kw) - names
    if unknown:
        raise UsageError(f"unknown {bench} parameter(s): {', '.join(sorted(unknown))}")
    p = type(p)(**{**p.__dict__, **{k: type(getattr(p, k))(v) for k, v in kw.items()}})
    return BenchSpec(bench, threads, mode, p)


def _team(threads: int) -> frozenset[int]:
    return frozenset(range(1, threads + 1))


def _fork_all(ctx, worker, args):
    kids = []
    for i, a in enumerate(args):
        pid = yield ctx.fork(worker, a)
        if pid != i + 1:
            raise UsageError("benchmark workers must be the first processors forked")
        kids.append(pid)
    for pid in kids:
        yield ctx.join(pid)


# -- TRIAD --------------------------------------------------------------------


def _triad(sim: Simulator, spec: BenchSpec):
    p: TriadParams = spec.params
    n, T = p.n, spec.threads
    if n % T:
        raise UsageError(f"triad: n={n} is not divisible by threads={T}")
    A, B, C = (sim.alloc(n * F8).base for _ in range(3))
    team = _team(T)

    def worker(ctx, arg):
        lo, hi = arg
        for _ in range(p.iterations):
            b = yield from ctx.read_f64(B + lo * F8, hi - lo)
            c = yield from ctx.read_f64(C + lo * F8, hi - lo)
            yield from ctx.write_f64(A + lo * F8, b + p.alpha * c)
            yield ctx.barrier("triad", team)

    def main(ctx, _):
        b0, c0 = triad_initial(n)
        yield from ctx.write_f64(B, b0)
        yield from ctx.write_f64(C, c0)
        yield from _fork_all(ctx, worker, block_bounds(n, T))
        a = yield from ctx.read_f64(A, n)
        return {"a": a, "checksum": fold(a)}

    return main


# -- Jacobi -------------------------------------------------------------------


def _jacobi(sim: Simulator, spec: BenchSpec):
    p: JacobiParams = spec.params
    n, T, mode = p.n, spec.threads, spec.mode
    if n < T or n < 3:
        raise UsageError("jacobi: need n >= threads and n >= 3")
    ax, ay, bb = p.coefficients
    row = n * F8
    U, UOLD, F = (sim.alloc(n * row).base for _ in range(3))
    ERR = sim.alloc(F8).base
    OUT = sim.alloc(2 * F8).base  # residual, iterations
    team = _team(T)

    def worker(ctx, arg):
        t, lo, hi = arg
        i0, i1 = max(lo, 1), min(hi, n - 1)
        k = 0
        error = 10.0 * p.tol
        while k < p.max_iters and error > p.tol:
            if t == 0 and mode == "lock":
                yield from ctx.write_f64(ERR, [0.0])
            mine = yield from ctx.read_f64(U + lo * row, (hi - lo) * n)
            yield from ctx.write_f64(UOLD + lo * row, mine)
            yield ctx.barrier("j1", team)

            local = 0.0
            if i0 < i1:
                blk = (yield from ctx.read_f64(UOLD + (i0 - 1) * row, (i1 - i0 + 2) * n)).reshape(-1, n)
                f = (yield from ctx.read_f64(F + i0 * row, (i1 - i0) * n)).reshape(-1, n)
                c = blk[1:-1, 1:-1]
                resid = (ax * (blk[:-2, 1:-1] + blk[2:, 1:-1])
                         + ay * (blk[1:-1, :-2] + blk[1:-1, 2:])
                         + bb * c - f[:, 1:-1]) / bb
                out = blk[1:-1].copy()
                out[:, 1:-1] = c - p.omega * resid
                yield from ctx.write_f64(U + i0 * row, out)
                local = fold(resid * resid)
            if mode == "lock":
                yield ctx.lock("err")
                cur = yield from ctx.read_f64(ERR, 1)
                yield from ctx.write_f64(ERR, [cur[0] + local])
                yield ctx.unlock("err")
            else:
                yield ctx.reduce(ERR, "sum", local, "j2")
            yield ctx.barrier("j2", team)

            total = (yield from ctx.read_f64(ERR, 1))[0]
            error = math.sqrt(total) / (n * n)
            k += 1
            if t == 0:
                yield from ctx.write_f64(OUT, [error])
                yield from ctx.write_i64(OUT + F8, k)
            yield ctx.barrier("j3", team)

    def main(ctx, _):
        yield from ctx.write_f64(F, np.array(jacobi_rhs(p)).ravel())
        args = [(t, lo, hi) for t, (lo, hi) in enumerate(block_bounds(n, T))]
        yield from _fork_all(ctx, worker, args)
        residual = float((yield from ctx.read_f64(OUT, 1))[0])
        iters = yield from ctx.read_i64(OUT + F8)
        u = yield from ctx.read_f64(U, n * n)
        return {"residual": residual, "iterations": iters, "u": u.reshape(n, n)}

    return main


# -- molecular dynamics -------------------------------------------------------


def _md(sim: Simulator, spec: BenchSpec):
    p: MDParams = spec.params
    N, T, mode = p.particles, spec.threads, spec.mode
    if N < T:
        raise UsageError("md: need particles >= threads")
    vec = 3 * F8
    POS, VEL, ACC, FRC = (sim.alloc(N * vec).base for _ in range(4))
    ENERGY = sim.alloc(2 * F8).base  # potential, kinetic pair sums
    team = _team(T)
    rmass = 1.0 / p.mass
    dt = p.dt

    def forces(pos, lo, hi):
        blk = pos[lo:hi]
        fb = np.zeros_like(blk)
        pairs = np.zeros((hi - lo, N))
        valid = np.zeros((hi - lo, N), dtype=bool)
        for j in range(N):
            r = blk - pos[j]
            d2 = r[:, 0] * r[:, 0] + r[:, 1] * r[:, 1] + r[:, 2] * r[:, 2]
            m = d2 < p.cutoff2
            if lo <= j < hi:
                m[j - lo] = False
            if not m.any():
                continue
            s = np.sqrt(d2[m] + p.soft2)
            pairs[m, j] = 0.5 * (p.strength / s)
            valid[m, j] = True
            coef = p.strength / (s * s * s)
            fb[m] = fb[m] + r[m] * coef[:, None]
        return fb, fold(pairs[valid])

    def worker(ctx, arg):
        t, lo, hi = arg
        m = hi - lo
        for step in range(p.steps):
            pos = (yield from ctx.read_f64(POS, 3 * N)).reshape(N, 3)
            vel = (yield from ctx.read_f64(VEL + lo * vec, 3 * m)).reshape(m, 3)
            fb, pot = forces(pos, lo, hi)
            kin = fold(vel[:, 0] * vel[:, 0] + vel[:, 1] * vel[:, 1] + vel[:, 2] * vel[:, 2])
            yield from ctx.write_f64(FRC + lo * vec, fb)
            if mode == "lock":
                yield ctx.lock("energy")
                cur = yield from ctx.read_f64(ENERGY, 2)
                yield from ctx.write_f64(ENERGY, [cur[0] + pot, cur[1] + kin])
                yield ctx.unlock("energy")
            else:
                yield ctx.reduce(ENERGY, "sum", pot, "mdA")
                yield ctx.reduce(ENERGY + F8, "sum", kin, "mdA")
            yield ctx.barrier("mdA", team)

            if t == 0 and mode == "lock" and step < p.steps - 1:
                yield from ctx.write_f64(ENERGY, [0.0, 0.0])
            acc = (yield from ctx.read_f64(ACC + lo * vec, 3 * m)).reshape(m, 3)
            mine = pos[lo:hi]
            new_pos = mine + vel * dt + 0.5 * dt * dt * acc
            new_vel = vel + 0.5 * dt * (fb * rmass + acc)
            yield from ctx.write_f64(POS + lo * vec, new_pos)
            yield from ctx.write_f64(VEL + lo * vec, new_vel)
            yield from ctx.write_f64(ACC + lo * vec, fb * rmass)
            yield ctx.barrier("mdB", team)

    def main(ctx, _):
        yield from ctx.write_f64(POS, np.array(md_initial(p)).ravel())
        args = [(t, lo, hi) for t, (lo, hi) in enumerate(block_bounds(N, T))]
        yield from _fork_all(ctx, worker, args)
        e = yield from ctx.read_f64(ENERGY, 2)
        pos = yield from ctx.read_f64(POS, 3 * N)
        vel = yield from ctx.read_f64(VEL, 3 * N)
        return {"potential": float(e[0]), "kinetic": float(e[1]) * 0.5 * p.mass,
                "pos": pos.reshape(N, 3), "vel": vel.reshape(N, 3)}

    return main


_BUILDERS = {"triad": _triad, "jacobi": _jacobi, "md": _md}


def run_bench(spec: BenchSpec, config: SimConfig | None = None, seed: int = 0,
              scheduler=None) -> BenchResult:
    sim = Simulator(config or SimConfig(), scheduler or RandomScheduler(seed))
    main = _BUILDERS[spec.bench](sim, spec)
    sim.spawn(main)
    res = sim.run()
    return BenchResult(spec, res.metrics, res.results[0], res)
