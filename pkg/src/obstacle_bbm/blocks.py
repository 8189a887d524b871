"""Mediant ratios, candidate cut indices and the optimal block division.

Everything here is exact.  Landscapes are rescaled by the least common
multiple of their denominators so that partial sums become Python integers
and every ratio comparison is a single cross-multiplication.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterable, Sequence

from .errors import EmptyLandscape, IndexRange, MismatchedLength, ObstacleError
from .landscape import ObstacleLandscape


@dataclass(frozen=True)
class BlockDivision:
    """Cut indices ``0 = u_0 < u_1 < ... < u_{n+1} = ell``; block ``i`` is ``(u_i, u_{i+1}]``."""

    cuts: tuple[int, ...]

    def __post_init__(self):
        cuts = tuple(int(c) for c in self.cuts)
        object.__setattr__(self, "cuts", cuts)
        if len(cuts) < 2 and cuts != (0,):
            raise ObstacleError(f"a division needs at least the cuts 0 and ell, got {cuts}")
        if cuts[0] != 0:
            raise ObstacleError(f"a division must start at 0, got {cuts}")
        if any(u >= v for u, v in zip(cuts, cuts[1:])):
            raise ObstacleError(f"cuts must be strictly increasing, got {cuts}")

    @property
    def ell(self) -> int:
        return self.cuts[-1]

    @property
    def blocks(self) -> list[tuple[int, int]]:
        """Blocks as ``(start, stop)`` with obstacles ``start+1 .. stop``."""
        return list(zip(self.cuts, self.cuts[1:]))

    def __iter__(self):
        return iter(self.cuts)

    def __len__(self):
        return len(self.cuts)


class _Sums:
    """Integer prefix sums of a landscape after clearing denominators."""

    __slots__ = ("A", "B", "ell")

    def __init__(self, landscape: ObstacleLandscape):
        dens = [q.denominator for q in landscape.a + landscape.b]
        scale = reduce(math.lcm, dens, 1)
        A = [0]
        B = [0]
        for ai, bi in landscape.pairs:
            A.append(A[-1] + ai.numerator * (scale // ai.denominator))
            B.append(B[-1] + bi.numerator * (scale // bi.denominator))
        self.A = A
        self.B = B
        self.ell = landscape.ell

    def less(self, m: int, n: int, p: int, q: int) -> bool:
        """ratio(m, n) < ratio(p, q), 1-based inclusive ranges."""
        return (self.B[n] - self.B[m - 1]) * (self.A[q] - self.A[p - 1]) < (
            self.B[q] - self.B[p - 1]
        ) * (self.A[n] - self.A[m - 1])


def ratio(landscape: ObstacleLandscape, m: int, n: int) -> Fraction:
    """``sum(b_m..b_n) / sum(a_m..a_n)`` for ``1 <= m <= n <= ell``."""
    if not 1 <= m <= n <= landscape.ell:
        raise IndexRange(f"ratio range [{m}, {n}] is empty or outside 1..{landscape.ell}")
    num = sum(landscape.b[m - 1 : n], Fraction(0))
    den = sum(landscape.a[m - 1 : n], Fraction(0))
    return num / den


def _require_obstacles(landscape: ObstacleLandscape):
    if landscape.ell == 0:
        raise EmptyLandscape()


def s_indices(landscape: ObstacleLandscape) -> list[int]:
    """Candidate cuts: 0, every interior m whose prefix ratio is at least the suffix ratio, and ell."""
    _require_obstacles(landscape)
    sums = _Sums(landscape)
    ell = landscape.ell
    inner = [m for m in range(1, ell) if not sums.less(1, m, m + 1, ell)]
    return [0, *inner, ell]


def optimal_blocks(landscape: ObstacleLandscape) -> BlockDivision:
    """Greedy construction of the optimal division over the candidate cuts.

    From the current cut ``u`` take the first candidate ``s[jt] > u``.  Among
    later candidates choose the furthest ``s[jh]`` such that for every
    candidate ``s[j]`` with ``jt <= j < jh`` the stretch ``u+1..s[j]`` is
    strictly cheaper than ``s[j]+1..s[jh]``.  Jump there, or to ``s[jt]``
    when no such candidate exists.
    """
    _require_obstacles(landscape)
    sums = _Sums(landscape)
    s = s_indices(landscape)
    ell = landscape.ell
    cuts = [0]
    u = 0
    while u < ell:
        jt = next(j for j, sj in enumerate(s) if sj > u)
        best = None
        for jh in range(len(s) - 1, jt, -1):
            target = s[jh]
            if all(sums.less(u + 1, s[j], s[j] + 1, target) for j in range(jt, jh)):
                best = jh
                break
        u = s[best] if best is not None else s[jt]
        cuts.append(u)
    return BlockDivision(tuple(cuts))


def _block_ok(sums: _Sums, start: int, stop: int) -> bool:
    return all(sums.less(start + 1, m, m + 1, stop) for m in range(start + 1, stop))


def is_admissible(landscape: ObstacleLandscape, division: BlockDivision | Sequence[int]) -> bool:
    """Every block is strictly cheaper on each prefix than on the matching suffix."""
    division = _as_division(division)
    if division.ell != landscape.ell:
        raise MismatchedLength(f"division ends at {division.ell} but landscape has {landscape.ell} obstacles")
    if landscape.ell == 0:
        return True
    sums = _Sums(landscape)
    return all(_block_ok(sums, u, v) for u, v in division.blocks)


def late_expensive(landscape: ObstacleLandscape) -> bool:
    """Whether the whole landscape forms a single admissible block."""
    _require_obstacles(landscape)
    return _block_ok(_Sums(landscape), 0, landscape.ell)


def _as_division(d) -> BlockDivision:
    return d if isinstance(d, BlockDivision) else BlockDivision(tuple(d))


def intersect_divisions(d1, d2) -> BlockDivision:
    d1, d2 = _as_division(d1), _as_division(d2)
    if d1.ell != d2.ell:
        raise MismatchedLength(f"divisions of different lengths: {d1.ell} vs {d2.ell}")
    return BlockDivision(tuple(sorted(set(d1.cuts) & set(d2.cuts))))


# ---------------------------------------------------------------- fuzzing

FUZZ_MAX = 32


def random_rational(rng: random.Random, hi: int = FUZZ_MAX) -> Fraction:
    return Fraction(rng.randint(1, hi), rng.randint(1, hi))


def random_widths(rng: random.Random, ell: int, hi: int = FUZZ_MAX) -> list[tuple[int, int]]:
    """Raw ``(numerator, denominator)`` pairs: ``ell`` for ``a`` followed by ``ell`` for ``b``."""
    return [(rng.randint(1, hi), rng.randint(1, hi)) for _ in range(2 * ell)]


def landscape_from_widths(raw: Sequence[tuple[int, int]]) -> ObstacleLandscape:
    qs = [Fraction(p, q) for p, q in raw]
    ell = len(qs) // 2
    return ObstacleLandscape(tuple(qs[:ell]), tuple(qs[ell:]))


def random_landscape(rng: random.Random, ell: int, hi: int = FUZZ_MAX) -> ObstacleLandscape:
    """Widths with numerator and denominator drawn uniformly from ``1..hi``."""
    return landscape_from_widths(random_widths(rng, ell, hi))


def random_division(rng: random.Random, ell: int) -> BlockDivision:
    inner = [m for m in range(1, ell) if rng.random() < 0.5]
    return BlockDivision((0, *inner, ell))


# ------------------------------------------------- three-term mediant rules
#
# Each rule takes integer widths (a1, a2, a3, b1, b2, b3) and returns
# (premise, conclusion).  A rule holds on a sample when premise implies
# conclusion.  Keys of the comparison table read as strict inequalities
# between ratios, e.g. "12<3" is (b1+b2)/(a1+a2) < b3/a3.


def _lt(bn, an, bd, ad):
    return bn * ad < bd * an


def _terms(a1, a2, a3, b1, b2, b3):
    return {
        "1<23": _lt(b1, a1, b2 + b3, a2 + a3),
        "2<3": _lt(b2, a2, b3, a3),
        "12<3": _lt(b1 + b2, a1 + a2, b3, a3),
        "1<2": _lt(b1, a1, b2, a2),
    }


def _rule(premise: Callable[[dict], bool], conclusion: Callable[[dict], bool]):
    def check(a1, a2, a3, b1, b2, b3):
        t = _terms(a1, a2, a3, b1, b2, b3)
        return premise(t), conclusion(t)

    return check


MEDIANT_RULES: dict[str, Callable] = {
    "A": _rule(lambda t: t["1<23"] and t["2<3"], lambda t: t["12<3"]),
    "B": _rule(lambda t: t["12<3"] and t["1<2"], lambda t: t["1<23"]),
    "C": _rule(lambda t: t["1<2"] and t["2<3"], lambda t: t["1<23"]),
    "D": _rule(lambda t: t["1<2"] and t["2<3"], lambda t: t["12<3"]),
    "E": _rule(lambda t: t["12<3"] and (not t["1<2"] or not t["1<23"]), lambda t: t["2<3"]),
    "F": _rule(lambda t: t["1<23"] and (not t["2<3"] or not t["12<3"]), lambda t: t["1<2"]),
    "G": _rule(lambda t: not t["1<23"] and not t["2<3"], lambda t: not t["12<3"]),
    "H": _rule(lambda t: not t["12<3"] and not t["1<2"], lambda t: not t["1<23"]),
    "I": _rule(lambda t: not t["1<2"] and not t["2<3"], lambda t: not t["12<3"]),
    "J": _rule(lambda t: not t["1<2"] and not t["2<3"], lambda t: not t["1<23"]),
    "K": _rule(lambda t: not t["1<23"] and (t["2<3"] or t["12<3"]), lambda t: not t["1<2"]),
    "L": _rule(lambda t: not t["12<3"] and (t["1<2"] or t["1<23"]), lambda t: not t["2<3"]),
}


def integer_sample(rng: random.Random, hi: int = FUZZ_MAX) -> tuple[int, ...]:
    """Six random positive rationals brought to a common denominator.

    Ratios are unchanged by the common scaling, so the returned integers can
    be fed straight to the mediant rules.
    """
    qs = [random_rational(rng, hi) for _ in range(6)]
    den = reduce(math.lcm, (q.denominator for q in qs), 1)
    return tuple(q.numerator * (den // q.denominator) for q in qs)


def check_rules(samples: Iterable[Sequence[int]], rules: dict[str, Callable] | None = None) -> dict[str, dict[str, int]]:
    """Count premise hits and counterexamples of every rule over ``samples``."""
    rules = MEDIANT_RULES if rules is None else rules
    stats = {name: {"premise": 0, "counterexamples": 0} for name in rules}
    for s in samples:
        for name, rule in rules.items():
            premise, conclusion = rule(*s)
            if premise:
                stats[name]["premise"] += 1
                if not conclusion:
                    stats[name]["counterexamples"] += 1
    return stats
