"""Closed-form optimal crossing plan and the predicted first-order maximum.

Inside a block with total widths ``A = sum a`` and ``B = sum b`` every
branching stretch is crossed at the same speed: with

    c = B^2 / (2 A^2),   f = sqrt((1 + c)/2 + sqrt(c^2/4 + c)),

the optimal times are ``x_m = a_m f`` and ``y_m = b_m B / (2 A (f - 1/(2f)))``.
Blocks are glued together at cut points where the intermediate exponent
drops to zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .blocks import BlockDivision, optimal_blocks
from .errors import EmptyLandscape, ObstacleError
from .landscape import ObstacleLandscape

FEASIBILITY_TOL = 1e-12
BISECTION_STEPS = 60
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class BlockConstants:
    c_tilde: float
    f_value: float
    block_a: float
    block_b: float

    @property
    def speed_gap(self) -> float:
        """``f - 1/(2f)``, positive because ``f > 1/sqrt(2)``."""
        return self.f_value - 1.0 / (2.0 * self.f_value)

    @property
    def block_time(self) -> float:
        return self.block_a * self.f_value + self.block_b**2 / (2.0 * self.block_a * self.speed_gap)


@dataclass(frozen=True)
class CrossingPlan:
    division: BlockDivision
    constants: tuple[BlockConstants, ...]
    x_star: tuple[float, ...]
    y_star: tuple[float, ...]
    c_star: tuple[float, ...]
    total_time: float

    @property
    def exponents(self) -> tuple[float, ...]:
        """Exponents including the fixed zeros at both ends."""
        return (0.0, *self.c_star, 0.0)


@dataclass(frozen=True)
class PartialCrossing:
    ell_hat_star: int
    b_star: float | None
    prefix_time: float


@dataclass(frozen=True)
class FrontierEstimate:
    feasible: bool
    total_time: float | None
    h_star: float | None
    limit_over_t: float
    partial: PartialCrossing | None = None
    bisection_trace: tuple[tuple[float, float], ...] = field(default=(), repr=False, compare=False)


def f_of(c_tilde: float) -> float:
    return math.sqrt((1.0 + c_tilde) / 2.0 + math.sqrt(c_tilde * c_tilde / 4.0 + c_tilde))


def _block_sums(landscape: ObstacleLandscape, start: int, stop: int) -> tuple[Fraction, Fraction]:
    return sum(landscape.a[start:stop], Fraction(0)), sum(landscape.b[start:stop], Fraction(0))


def block_constants(landscape: ObstacleLandscape, division: BlockDivision, block_index: int) -> BlockConstants:
    blocks = division.blocks
    if not 0 <= block_index < len(blocks):
        raise ObstacleError(f"block index {block_index} outside 0..{len(blocks) - 1}")
    start, stop = blocks[block_index]
    A, B = _block_sums(landscape, start, stop)
    c_tilde = B * B / (2 * A * A)
    ct = float(c_tilde)
    return BlockConstants(ct, f_of(ct), float(A), float(B))


def crossing_plan(landscape: ObstacleLandscape, division: BlockDivision | None = None) -> CrossingPlan:
    """Optimal per-obstacle times and intermediate exponents.

    ``division`` defaults to the optimal block division; passing another one
    evaluates the blockwise formulas on that division instead.
    """
    if landscape.ell == 0:
        raise EmptyLandscape()
    division = division or optimal_blocks(landscape)
    consts = []
    xs: list[float] = []
    ys: list[float] = []
    cs: list[float] = []
    for i, (start, stop) in enumerate(division.blocks):
        k = block_constants(landscape, division, i)
        consts.append(k)
        A, B = _block_sums(landscape, start, stop)
        gap = k.speed_gap
        for m in range(start, stop):
            xs.append(float(landscape.a[m]) * k.f_value)
            ys.append(float(landscape.b[m] * B / A) / (2.0 * gap))
        # exponents after each obstacle of the block except its last one
        a_left = b_left = Fraction(0)
        for m in range(start, stop - 1):
            a_left += landscape.a[m]
            b_left += landscape.b[m]
            cross = (a_left * (B - b_left) - b_left * (A - a_left)) / B
            cs.append(float(cross) * gap)
        if stop < landscape.ell:
            cs.append(0.0)
    total = math.fsum(k.block_time for k in consts)
    return CrossingPlan(division, tuple(consts), tuple(xs), tuple(ys), tuple(cs), total)


def total_time(landscape: ObstacleLandscape) -> float:
    """Minimal total crossing time: the sum of the block times."""
    if landscape.ell == 0:
        return 0.0
    division = optimal_blocks(landscape)
    return math.fsum(block_constants(landscape, division, i).block_time for i in range(len(division.blocks)))


def feasibility(landscape: ObstacleLandscape) -> tuple[float, bool]:
    if landscape.ell == 0:
        raise EmptyLandscape()
    t = total_time(landscape)
    return t, t <= 1.0 + FEASIBILITY_TOL


def _feasible_time(landscape: ObstacleLandscape) -> tuple[float, bool]:
    t = total_time(landscape)
    return t, t <= 1.0 + FEASIBILITY_TOL


def frontier(landscape: ObstacleLandscape) -> FrontierEstimate:
    """Predicted limit of ``max / t``.

    When the full landscape cannot be crossed, fall back to the highest
    completely crossable prefix and then either stop inside the next
    branching stretch or push partway into the next obstacle, whichever the
    remaining time allows.
    """
    height = float(landscape.height)
    if landscape.ell == 0:
        return FrontierEstimate(True, 0.0, SQRT2, SQRT2)
    t_all, ok = _feasible_time(landscape)
    if ok:
        h = SQRT2 * max(0.0, 1.0 - t_all)
        return FrontierEstimate(True, t_all, h, height + h)

    # highest prefix that can be crossed completely (0 if none)
    ell_hat, t_prefix = 0, 0.0
    for n in range(landscape.ell - 1, 0, -1):
        t_n, ok_n = _feasible_time(landscape.truncated(n))
        if ok_n:
            ell_hat, t_prefix = n, t_n
            break
    prefix = landscape.truncated(ell_hat)
    base = float(prefix.height)
    reach = SQRT2 * max(0.0, 1.0 - t_prefix)
    nxt_a = landscape.a[ell_hat]
    if reach <= float(nxt_a):
        return FrontierEstimate(False, t_all, None, base + reach, PartialCrossing(ell_hat, None, t_prefix))

    b_star, trace = _largest_crossable_width(landscape, ell_hat + 1)
    limit = base + float(nxt_a) + b_star
    return FrontierEstimate(False, t_all, None, limit, PartialCrossing(ell_hat, b_star, t_prefix), trace)


def _largest_crossable_width(landscape: ObstacleLandscape, n: int) -> tuple[float, tuple]:
    """Supremum of last-obstacle widths in ``(0, b_n]`` keeping the first ``n`` obstacles crossable."""
    lo, hi = Fraction(0), landscape.b[n - 1]
    trace = []
    for _ in range(BISECTION_STEPS):
        mid = (lo + hi) / 2
        t_mid, ok = _feasible_time(landscape.truncated(n, last_b=mid))
        trace.append((float(mid), t_mid))
        if ok:
            lo = mid
        else:
            hi = mid
    ordered = sorted(trace)
    for (b0, t0), (b1, t1) in zip(ordered, ordered[1:]):
        if t1 < t0 - 1e-12:
            raise ObstacleError(f"crossing time not monotone in the last width near b={b0:.6g}")
    return float(lo), tuple(trace)
