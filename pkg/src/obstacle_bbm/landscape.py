"""Obstacle landscapes and the branching-rate geometry they induce.

A landscape is a finite sequence of pairs ``(a_i, b_i)`` of exact positive
rationals.  For a time horizon ``t`` the real line is cut into stretches of
length ``a_i * t`` where particles branch at rate 1, each followed by an
obstacle of length ``b_i * t`` where branching is switched off.  Below 0 and
above the last obstacle the rate is 1 again.

The empty landscape (``ell == 0``) is accepted and stands for homogeneous
branching Brownian motion.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Iterable, Sequence

from .errors import NonPositiveWidth, ObstacleError


def _as_fraction(value, index: int, which: str) -> Fraction:
    if isinstance(value, bool):
        raise ObstacleError(f"obstacle {index}: width {which} must be a rational, got {value!r}")
    if isinstance(value, (Fraction, int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ObstacleError(f"obstacle {index}: cannot parse {which}={value!r} as a rational") from exc
    raise ObstacleError(
        f"obstacle {index}: width {which} must be an integer or a 'p/q' string, got {type(value).__name__}"
    )


@dataclass(frozen=True)
class ObstacleLandscape:
    a: tuple[Fraction, ...]
    b: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise ObstacleError("a and b must have the same length")
        for i, (ai, bi) in enumerate(zip(self.a, self.b), start=1):
            if ai <= 0:
                raise NonPositiveWidth(i, "a", ai)
            if bi <= 0:
                raise NonPositiveWidth(i, "b", bi)

    @property
    def ell(self) -> int:
        return len(self.a)

    def __len__(self) -> int:
        return len(self.a)

    @property
    def pairs(self) -> list[tuple[Fraction, Fraction]]:
        return list(zip(self.a, self.b))

    @property
    def height(self) -> Fraction:
        """Top of the last obstacle per unit horizon, ``sum(a_i + b_i)``."""
        return sum(self.a, Fraction(0)) + sum(self.b, Fraction(0))

    def truncated(self, n: int, last_b: Fraction | None = None) -> ObstacleLandscape:
        """First ``n`` obstacles, optionally replacing the width of obstacle ``n``."""
        a = self.a[:n]
        b = list(self.b[:n])
        if last_b is not None and n > 0:
            b[-1] = Fraction(last_b)
        return ObstacleLandscape(a, tuple(b))

    def scaled(self, factor) -> ObstacleLandscape:
        lam = Fraction(factor)
        return ObstacleLandscape(tuple(lam * x for x in self.a), tuple(lam * x for x in self.b))

    def sub(self, start: int, stop: int) -> ObstacleLandscape:
        """Obstacles ``start+1 .. stop`` (1-based, inclusive) as their own landscape."""
        return ObstacleLandscape(self.a[start:stop], self.b[start:stop])

    def to_json(self) -> dict:
        return {"obstacles": [{"a": _fmt(x), "b": _fmt(y)} for x, y in self.pairs]}


def _fmt(q: Fraction) -> str | int:
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def validate_landscape(raw: Iterable[Sequence]) -> ObstacleLandscape:
    """Build a landscape from ``(a, b)`` pairs, rejecting non-positive widths.

    Entries may be ints, Fractions or ``"p/q"`` strings.  Errors carry the
    1-based obstacle index.
    """
    a: list[Fraction] = []
    b: list[Fraction] = []
    for i, pair in enumerate(raw, start=1):
        try:
            ai, bi = pair
        except (TypeError, ValueError) as exc:
            raise ObstacleError(f"obstacle {i}: expected an (a, b) pair, got {pair!r}") from exc
        ai = _as_fraction(ai, i, "a")
        bi = _as_fraction(bi, i, "b")
        if ai <= 0:
            raise NonPositiveWidth(i, "a", ai)
        if bi <= 0:
            raise NonPositiveWidth(i, "b", bi)
        a.append(ai)
        b.append(bi)
    return ObstacleLandscape(tuple(a), tuple(b))


def parse_landscape(doc) -> ObstacleLandscape:
    """Parse the JSON document form ``{"obstacles": [{"a": ..., "b": ...}, ...]}``."""
    if not isinstance(doc, dict) or "obstacles" not in doc:
        raise ObstacleError("landscape document must be an object with an 'obstacles' array")
    obstacles = doc["obstacles"]
    if not isinstance(obstacles, list):
        raise ObstacleError("'obstacles' must be an array")
    raw = []
    for i, entry in enumerate(obstacles, start=1):
        if not isinstance(entry, dict) or set(entry) != {"a", "b"}:
            raise ObstacleError(f"obstacle {i}: expected an object with exactly the keys 'a' and 'b'")
        raw.append((entry["a"], entry["b"]))
    return validate_landscape(raw)


def load_landscape(path: str | Path) -> ObstacleLandscape:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ObstacleError(f"{path}: invalid JSON ({exc})") from exc
    return parse_landscape(doc)


@dataclass(frozen=True)
class RegionGeometry:
    horizon: float
    obstacle_intervals: tuple[tuple[float, float], ...]
    cumulative_tops: tuple[float, ...]
    _edges: tuple[float, ...] = field(default=(), repr=False, compare=False)


def geometry(landscape: ObstacleLandscape, t: float) -> RegionGeometry:
    """Obstacle intervals ``(lo_m, hi_m)`` in space units for horizon ``t``.

    Partial sums are taken in exact arithmetic and converted once, so that
    adjacent intervals never overlap because of rounding.
    """
    if not t > 0:
        raise ValueError(f"horizon must be positive, got {t}")
    tq = Fraction(t)
    intervals = []
    tops = []
    base = Fraction(0)
    for ai, bi in landscape.pairs:
        lo = (base + ai) * tq
        base += ai + bi
        hi = base * tq
        intervals.append((float(lo), float(hi)))
        tops.append(float(hi))
    return RegionGeometry(float(t), tuple(intervals), tuple(tops))


def branching_rate(geo: RegionGeometry, x: float) -> int:
    """1 outside the open obstacle intervals, 0 strictly inside one."""
    for lo, hi in geo.obstacle_intervals:
        if lo < x < hi:
            return 0
    return 1


def inside_obstacles(geo: RegionGeometry, positions):
    """Vectorised membership test used by the simulator: True where rate is 0."""
    import numpy as np

    positions = np.asarray(positions, dtype=float)
    inside = np.zeros(positions.shape, dtype=bool)
    for lo, hi in geo.obstacle_intervals:
        inside |= (positions > lo) & (positions < hi)
    return inside
