"""Sequential reference implementations in plain scalar Python.

These define the numerically expected results of the parallel benchmarks.
Where a parallel run accumulates per-thread partial sums, the reference
does the same: each partial is a left fold over the thread's own block, and
partials are combined in ascending thread order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


def block_bounds(n: int, threads: int) -> list[tuple[int, int]]:
    return [(t * n // threads, (t + 1) * n // threads) for t in range(threads)]


# -- TRIAD --------------------------------------------------------------------


def triad_initial(n: int) -> tuple[list[float], list[float]]:
    return [float(i + 1) for i in range(n)], [1.0] * n


def triad_reference(n: int, iterations: int, alpha: float) -> list[float]:
    b, c = triad_initial(n)
    a = [0.0] * n
    for _ in range(iterations):
        for i in range(n):
            a[i] = b[i] + alpha * c[i]
    return a


# -- Jacobi -------------------------------------------------------------------


@dataclass(frozen=True)
class JacobiParams:
    n: int = 32
    alpha: float = 0.0543
    omega: float = 1.0
    tol: float = 1e-10
    max_iters: int = 60

    @property
    def dx(self) -> float:
        return 2.0 / (self.n - 1)

    @property
    def coefficients(self) -> tuple[float, float, float]:
        ax = 1.0 / (self.dx * self.dx)
        ay = ax
        b = -2.0 / (self.dx * self.dx) - 2.0 / (self.dx * self.dx) - self.alpha
        return ax, ay, b


def jacobi_rhs(p: JacobiParams) -> list[list[float]]:
    """Right-hand side whose exact solution is (1 - x^2)(1 - y^2) on [-1, 1]^2."""
    f = []
    for i in range(p.n):
        xx = -1.0 + p.dx * i
        row = []
        for j in range(p.n):
            yy = -1.0 + p.dx * j
            row.append(-p.alpha * (1.0 - xx * xx) * (1.0 - yy * yy)
                       - 2.0 * (1.0 - xx * xx) - 2.0 * (1.0 - yy * yy))
        f.append(row)
    return f


@dataclass
class JacobiResult:
    u: list[list[float]]
    residual: float
    iterations: int
    history: list[float]
    partials: list[float]  # per-thread squared-residual sums of the last sweep


def jacobi_reference(p: JacobiParams, threads: int = 1) -> JacobiResult:
    n = p.n
    ax, ay, b = p.coefficients
    f = jacobi_rhs(p)
    u = [[0.0] * n for _ in range(n)]
    bounds = block_bounds(n, threads)
    error = 10.0 * p.tol
    k = 0
    history = []
    partials = []
    while k < p.max_iters and error > p.tol:
        uold = [row[:] for row in u]
        partials = []
        for lo, hi in bounds:
            acc = 0.0
            for i in range(max(lo, 1), min(hi, n - 1)):
                for j in range(1, n - 1):
                    resid = (ax * (uold[i - 1][j] + uold[i + 1][j])
                             + ay * (uold[i][j - 1] + uold[i][j + 1])
                             + b * uold[i][j] - f[i][j]) / b
                    u[i][j] = uold[i][j] - p.omega * resid
                    acc = acc + resid * resid
            partials.append(acc)
        total = partials[0]
        for part in partials[1:]:
            total = total + part
        error = math.sqrt(total) / (n * n)
        history.append(error)
        k += 1
    return JacobiResult(u, error, k, history, partials)


# -- molecular dynamics -------------------------------------------------------


@dataclass(frozen=True)
class MDParams:
    particles: int = 64
    steps: int = 10
    dt: float = 0.01
    mass: float = 1.0
    strength: float = 1.0  # pair potential k / sqrt(r^2 + soft^2)
    soft2: float = 0.01
    cutoff2: float = 6.25


def md_initial(p: MDParams) -> list[list[float]]:
    """Perturbed cubic lattice with unit spacing."""
    side = 1
    while side ** 3 < p.particles:
        side += 1
    pos = []
    for i in range(p.particles):
        cell = (i % side, (i // side) % side, i // (side * side))
        pos.append([cell[d] + 0.1 * math.sin(1.7 * i + 0.9 * d) for d in range(3)])
    return pos


@dataclass
class MDResult:
    pos: list[list[float]]
    vel: list[list[float]]
    acc: list[list[float]]
    force: list[list[float]]
    potential: float
    kinetic: float
    partials: tuple = ()  # (potential, kinetic) per-thread sums of the last step


def md_forces(p: MDParams, pos, lo: int, hi: int):
    """Forces on particles lo..hi-1 and the block's potential and pair sums."""
    forces = []
    pot = 0.0
    for i in range(lo, hi):
        fi = [0.0, 0.0, 0.0]
        for j in range(p.particles):
            if j == i:
                continue
            r0 = pos[i][0] - pos[j][0]
            r1 = pos[i][1] - pos[j][1]
            r2 = pos[i][2] - pos[j][2]
            d2 = r0 * r0 + r1 * r1 + r2 * r2
            if d2 >= p.cutoff2:
                continue
            s = math.sqrt(d2 + p.soft2)
            pot = pot + 0.5 * (p.strength / s)
            coef = p.strength / (s * s * s)
            fi[0] = fi[0] + r0 * coef
            fi[1] = fi[1] + r1 * coef
            fi[2] = fi[2] + r2 * coef
        forces.append(fi)
    return forces, pot


def md_reference(p: MDParams, threads: int = 1) -> MDResult:
    pos = md_initial(p)
    vel = [[0.0] * 3 for _ in range(p.particles)]
    acc = [[0.0] * 3 for _ in range(p.particles)]
    force = [[0.0] * 3 for _ in range(p.particles)]
    bounds = block_bounds(p.particles, threads)
    rmass = 1.0 / p.mass
    dt = p.dt
    pot = kin = 0.0
    pots, kins = [], []
    for _ in range(p.steps):
        pots, kins = [], []
        for lo, hi in bounds:
            fb, pb = md_forces(p, pos, lo, hi)
            force[lo:hi] = fb
            kb = 0.0
            for i in range(lo, hi):
                v = vel[i]
                kb = kb + (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
            pots.append(pb)
            kins.append(kb)
        pot, kin = pots[0], kins[0]
        for t in range(1, threads):
            pot = pot + pots[t]
            kin = kin + kins[t]
        for i in range(p.particles):
            for d in range(3):
                pos[i][d] = pos[i][d] + vel[i][d] * dt + 0.5 * dt * dt * acc[i][d]
                vel[i][d] = vel[i][d] + 0.5 * dt * (force[i][d] * rmass + acc[i][d])
                acc[i][d] = force[i][d] * rmass
    return MDResult(pos, vel, acc, force, pot, kin * 0.5 * p.mass, (pots, kins))
