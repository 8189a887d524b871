"""Brute-force checks of the crossing problem that never touch the closed form.

Two searches are provided:

* :func:`brute_force_max_D` maximises the overshoot objective directly over
  time allocations ``(x_1, y_1, ..., x_l, y_l)``.
* :func:`brute_force_min_time_Dhat` minimises total crossing time over the
  intermediate exponents, solving each obstacle with :func:`solve_step`.

Both run an exact search on a lattice and then polish the best lattice
point by coordinate descent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainViolation, InfeasibleStep, MismatchedLength, NoFeasiblePoint, ObstacleError
from .foc import DEFAULT_CAP, solve_step, solve_step_batch
from .landscape import ObstacleLandscape

DOMAIN_TOL = 1e-9
REFINE_ROUNDS = 5
REFINE_SHRINK = 4.0


@dataclass(frozen=True)
class TimeAllocation:
    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise MismatchedLength("x and y must have the same length")
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))

    @property
    def total(self) -> float:
        return math.fsum(self.x) + math.fsum(self.y)

    def as_vector(self) -> np.ndarray:
        return np.array([v for pair in zip(self.x, self.y) for v in pair])

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> TimeAllocation:
        v = list(v)
        return cls(tuple(v[0::2]), tuple(v[1::2]))


@dataclass(frozen=True)
class OracleResult:
    best: TimeAllocation
    value: float
    grid: float
    evaluations: int
    lattice_value: float
    exponents: tuple[float, ...] = ()
    slack: float | None = None
    extra: dict = field(default_factory=dict, compare=False)


def _widths(landscape: ObstacleLandscape):
    return [float(v) for v in landscape.a], [float(v) for v in landscape.b]


def prefix_gains(landscape: ObstacleLandscape, alloc: TimeAllocation) -> list[float]:
    """Running exponent ``sum_{i<=m} (x_i - a_i^2/(2 x_i) - b_i^2/(2 y_i))`` after each obstacle."""
    a, b = _widths(landscape)
    out, k = [], 0.0
    for ai, bi, xi, yi in zip(a, b, alloc.x, alloc.y):
        k += xi - ai * ai / (2.0 * xi) - bi * bi / (2.0 * yi)
        out.append(k)
    return out


def check_domain(landscape: ObstacleLandscape, alloc: TimeAllocation, tol: float = DOMAIN_TOL) -> None:
    """Raise :class:`DomainViolation` naming the first broken constraint.

    Positivity is checked first since the running exponent is undefined
    without it.
    """
    if len(alloc.x) != landscape.ell:
        raise MismatchedLength(f"allocation has {len(alloc.x)} entries, landscape has {landscape.ell}")
    for i, (xi, yi) in enumerate(zip(alloc.x, alloc.y), start=1):
        if not (xi > 0 and yi > 0):
            raise DomainViolation("positivity", i)
    for m, k in enumerate(prefix_gains(landscape, alloc), start=1):
        if k < -tol:
            raise DomainViolation("prefix", m)
    if alloc.total > 1.0 + tol:
        raise DomainViolation("budget")


def objective(landscape: ObstacleLandscape, alloc: TimeAllocation, tol: float = DOMAIN_TOL) -> float:
    """``(1 - S) * (1 - sum(y + a^2/(2x) + b^2/(2y)))`` with ``S`` the total time."""
    check_domain(landscape, alloc, tol)
    a, b = _widths(landscape)
    s = alloc.total
    cost = math.fsum(yi + ai * ai / (2 * xi) + bi * bi / (2 * yi) for ai, bi, xi, yi in zip(a, b, alloc.x, alloc.y))
    return (1.0 - s) * (1.0 - cost)


def heuristic_exponent(landscape: ObstacleLandscape, alloc: TimeAllocation, h: float) -> float:
    """Growth rate of the number of particles that follow ``alloc`` and end ``h t`` above the last obstacle."""
    k = prefix_gains(landscape, alloc)[-1] if landscape.ell else 0.0
    rest = 1.0 - alloc.total
    return k + rest - h * h / (2.0 * rest)


# -------------------------------------------------------- direct search


def _repair(a, b, v: np.ndarray) -> bool:
    """Raise obstacle times just enough to restore every prefix constraint.

    Works in place on the interleaved vector; returns False when a repair is
    impossible (the branching stretch alone leaves a deficit no finite
    obstacle time can fill).
    """
    k = 0.0
    for i in range(len(a)):
        x, y = v[2 * i], v[2 * i + 1]
        if x <= 0 or y <= 0:
            return False
        head = k + x - a[i] ** 2 / (2 * x)
        if head - b[i] ** 2 / (2 * y) < 0:
            if head <= 0:
                return False
            v[2 * i + 1] = b[i] ** 2 / (2 * head)
            k = 0.0
        else:
            k = head - b[i] ** 2 / (2 * y)
    return True


def _direct_value(a, b, v: np.ndarray) -> float:
    s = float(v.sum())
    if s > 1.0:
        return -math.inf
    x, y = v[0::2], v[1::2]
    aa, bb = np.asarray(a), np.asarray(b)
    k = np.cumsum(x - aa**2 / (2 * x) - bb**2 / (2 * y))
    if np.any(k < -DOMAIN_TOL):
        return -math.inf
    return (1.0 - s) * (k[-1] + 1.0 - s)


def _coordinate_descent(score, v0: np.ndarray, step0: float, *, lower=None, repair=None):
    """Maximise ``score`` from ``v0`` by single-coordinate moves.

    A blocked move is retried with halved length so the iterate can slide up
    to a constraint.  ``repair`` may adjust a trial point before scoring.
    """
    v = v0.copy()
    best = score(v)
    evals = 1
    step = step0
    for _ in range(REFINE_ROUNDS):
        improved = True
        sweeps = 0
        while improved and sweeps < 200:
            improved = False
            sweeps += 1
            for i in range(v.size):
                for sign in (1.0, -1.0):
                    h = step
                    for _ in range(12):
                        trial = v.copy()
                        trial[i] += sign * h
                        if lower is not None and trial[i] < lower:
                            trial[i] = lower
                        ok = repair(trial) if repair else True
                        val = score(trial) if ok else -math.inf
                        evals += 1
                        if val > best + 1e-15:
                            v, best, improved = trial, val, True
                            break
                        if val > -math.inf:
                            break
                        h /= 2.0
        step /= REFINE_SHRINK
    return v, best, evals


def _lattice_search(a, b, n: int):
    """Exact maximum of the objective over the offset lattice with ``n`` cells per unit.

    Returns ``(vector, value, evaluations)`` or ``None`` when no lattice
    point lies in the domain.
    """
    ell = len(a)
    r = 1.0 / n
    half = np.arange(n) + 0.5
    evals = 0

    # gain[m][s]: best x - a^2/2x - b^2/2y with x + y = s r, plus the split realising it
    gains, splits = [], []
    X = half[:, None] * r
    Y = half[None, :] * r
    s_idx = np.arange(n)[:, None] + np.arange(n)[None, :] + 1
    flat_s = s_idx.ravel()
    for m in range(ell):
        g = X - a[m] ** 2 / (2 * X) - b[m] ** 2 / (2 * Y)
        g = np.where(s_idx <= n, g, -np.inf)
        evals += g.size
        best = np.full(n + 1, -np.inf)
        arg = np.full(n + 1, -1, dtype=int)
        flat_g = g.ravel()
        order = np.lexsort((-flat_g, flat_s))
        for s_val, pos in zip(*np.unique(flat_s[order], return_index=True)):
            if s_val <= n:
                best[s_val] = flat_g[order[pos]]
                arg[s_val] = order[pos]
        gains.append(best)
        splits.append(arg)

    F = np.full(n + 1, -np.inf)
    F[0] = 0.0
    choice = []
    for m in range(ell):
        G = np.full(n + 1, -np.inf)
        ch = np.full(n + 1, -1, dtype=int)
        for s in range(1, n + 1):
            cand = F[: n + 1 - s] + gains[m][s]
            total = np.arange(s, n + 1)
            better = cand > G[total]
            G[total[better]] = cand[better]
            ch[total[better]] = s
        G[G < 0] = -np.inf
        F = G
        choice.append(ch)

    S = np.arange(n + 1) * r
    vals = np.full(n + 1, -np.inf)
    live = np.isfinite(F)
    vals[live] = (1.0 - S[live]) * (F[live] + 1.0 - S[live])
    if not live.any():
        return None
    s_best = int(np.argmax(vals))

    v = np.zeros(2 * ell)
    s_rem = s_best
    for m in reversed(range(ell)):
        s = choice[m][s_rem]
        jj, kk = divmod(int(splits[m][s]), n)
        v[2 * m], v[2 * m + 1] = (jj + 0.5) * r, (kk + 0.5) * r
        s_rem -= s
    return v, float(vals[s_best]), evals


def brute_force_max_D(landscape: ObstacleLandscape, resolution: float = 1e-2) -> OracleResult:
    """Maximise the overshoot objective over the allocation domain.

    Each coordinate lives on the offset lattice ``(j + 1/2) r``, so every
    per-obstacle total is a whole multiple of ``r``.  For a fixed total
    time the objective increases with the final running exponent, and the
    running exponent is a sum of per-obstacle gains subject to staying
    nonnegative.  A dynamic programme over (obstacle, elapsed lattice time)
    therefore finds the exact lattice maximum without enumerating all
    ``(1/r)^(2l)`` points.

    Nearly critical landscapes can have a domain thinner than the lattice
    spacing.  The descent is then seeded from the minimum-time allocation
    found in exponent space, which is a member of the domain whenever the
    landscape can be crossed at all; ``extra["seed"]`` records which start
    was used.
    """
    ell = landscape.ell
    if ell == 0:
        raise ObstacleError("the direct search needs at least one obstacle")
    a, b = _widths(landscape)
    n = int(round(1.0 / resolution))
    r = 1.0 / n
    found = _lattice_search(a, b, n)
    if found is not None:
        v, lattice_value, evals = found
        seed = "lattice"
    else:
        try:
            fallback = brute_force_min_time_Dhat(landscape, resolution)
        except NoFeasiblePoint:
            raise NoFeasiblePoint(
                f"no lattice allocation at resolution {resolution} satisfies the domain constraints"
            ) from None
        v = fallback.best.as_vector()
        lattice_value = -math.inf
        evals = fallback.evaluations
        seed = "exponent-space"

    v, value, more = _coordinate_descent(
        lambda w: _direct_value(a, b, w), v, r, repair=lambda w: _repair(a, b, w)
    )
    alloc = TimeAllocation.from_vector(v)
    slack = prefix_gains(landscape, alloc)[-1]
    return OracleResult(
        alloc, float(value), resolution, evals + more, lattice_value, slack=float(slack), extra={"seed": seed}
    )


# ---------------------------------------------------- exponent-space search


def chain_steps(landscape: ObstacleLandscape, exponents: Sequence[float], cap: float = DEFAULT_CAP) -> TimeAllocation:
    """Optimal per-obstacle steps for interior exponents ``c_1..c_{l-1}`` (ends fixed at 0)."""
    a, b = _widths(landscape)
    cs = [0.0, *map(float, exponents), 0.0]
    if len(cs) != landscape.ell + 1:
        raise MismatchedLength(f"expected {landscape.ell - 1} exponents, got {len(exponents)}")
    xs, ys = [], []
    for m in range(landscape.ell):
        st = solve_step(a[m], b[m], cs[m], cs[m + 1], cap)
        xs.append(st.x)
        ys.append(st.y)
    return TimeAllocation(tuple(xs), tuple(ys))


def chain_time(landscape: ObstacleLandscape, exponents: Sequence[float], cap: float = DEFAULT_CAP) -> float:
    try:
        return chain_steps(landscape, exponents, cap).total
    except InfeasibleStep:
        return math.inf


def brute_force_min_time_Dhat(
    landscape: ObstacleLandscape, resolution: float = 1e-2, c_max: float = 1.0, cap: float = DEFAULT_CAP
) -> OracleResult:
    """Minimise total crossing time over nonnegative intermediate exponents.

    Exponents are searched on the grid ``0, r, 2r, ..., c_max``.  A
    min-plus chain over per-obstacle step-time tables gives the exact grid
    minimum, which is then polished by coordinate descent.
    """
    ell = landscape.ell
    if ell == 0:
        raise ObstacleError("the exponent search needs at least one obstacle")
    a, b = _widths(landscape)
    grid = np.arange(0.0, c_max + resolution / 2, resolution)
    zero = np.array([0.0])
    evals = 0

    def table(m, left, right):
        x, y = solve_step_batch(a[m], b[m], left[:, None], right[None, :], cap)
        t = x + y
        return np.where(np.isfinite(t), t, np.inf)

    # cost[c] = best time to reach exponent c above obstacle m
    lefts = [zero] + [grid] * (ell - 1)
    rights = [grid] * (ell - 1) + [zero]
    cost = np.zeros(1)
    back = []
    for m in range(ell):
        T = table(m, lefts[m], rights[m])
        evals += T.size
        total = cost[:, None] + T
        idx = np.argmin(total, axis=0)
        back.append(idx)
        cost = total[idx, np.arange(total.shape[1])]
    grid_min = float(cost[0])
    if not math.isfinite(grid_min) or grid_min > 1.0 + DOMAIN_TOL:
        raise NoFeasiblePoint(f"minimal crossing time on the exponent grid is {grid_min:.6g} > 1")

    c = np.zeros(max(ell - 1, 0))
    pos = 0
    for m in reversed(range(1, ell)):
        pos = int(back[m][pos])
        c[m - 1] = grid[pos]

    if ell > 1:
        c, neg, more = _coordinate_descent(lambda w: -chain_time(landscape, w, cap), c, resolution, lower=0.0)
        evals += more
        best_time = -neg
    else:
        best_time = grid_min
    alloc = chain_steps(landscape, c, cap)
    slack = prefix_gains(landscape, alloc)[-1]
    return OracleResult(alloc, float(best_time), resolution, evals, grid_min, tuple(float(v) for v in c), float(slack))


# --------------------------------------------------------- convexity probe


@dataclass(frozen=True)
class ConvexityProbe:
    feasible: bool
    combined_total: float
    bound: float
    optimal_total: float


def convexity_probe(
    landscape: ObstacleLandscape,
    c0: Sequence[float],
    c1: Sequence[float],
    alpha: float = 0.5,
    cap: float = DEFAULT_CAP,
) -> ConvexityProbe:
    """Check that a convex combination of two feasible exponent vectors stays feasible.

    The witness allocation mixes the two optimal branching times linearly
    and picks the obstacle time that hits the mixed exponent exactly.  Its
    total must not exceed the mixed totals, and the optimal chain at the
    mixed exponents can only be faster.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ObstacleError("alpha must lie in [0, 1]")
    s0 = chain_steps(landscape, c0, cap)
    s1 = chain_steps(landscape, c1, cap)
    if s0.total > 1 + DOMAIN_TOL or s1.total > 1 + DOMAIN_TOL:
        raise ObstacleError("both endpoint exponent vectors must be feasible")
    a, b = _widths(landscape)
    e0 = [0.0, *map(float, c0), 0.0]
    e1 = [0.0, *map(float, c1), 0.0]
    total = 0.0
    feasible = True
    for m in range(landscape.ell):
        x = alpha * s0.x[m] + (1 - alpha) * s1.x[m]
        drop = alpha * (e0[m] - e0[m + 1]) + (1 - alpha) * (e1[m] - e1[m + 1])
        den = drop + x - a[m] ** 2 / (2 * x)
        if den <= 0:
            feasible = False
            break
        total += x + b[m] ** 2 / (2 * den)
    bound = alpha * s0.total + (1 - alpha) * s1.total
    feasible = feasible and total <= bound + 1e-12 and total <= 1 + DOMAIN_TOL
    mid = [alpha * u + (1 - alpha) * w for u, w in zip(c0, c1)]
    return ConvexityProbe(feasible, total, bound, chain_time(landscape, mid, cap))
