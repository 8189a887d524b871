"""Per-obstacle step optimizer.

For one obstacle with widths ``(a, b)``, starting from ``e^{c_prev t}``
particles and asking for ``e^{c_next t}`` above it, the fastest crossing
spends ``x`` in the branching stretch and

    y = b^2 / (2 g(x)),   g(x) = c_prev - c_next + x - a^2 / (2x),

in the obstacle.  Minimising ``x + y`` gives the stationarity condition

    2 g(x)^2 = b^2 (1 + a^2 / (2 x^2)),

which after clearing denominators is a monic quartic in ``x``.  Its real
roots are classified by the closed-form discriminant and located with
companion-matrix eigenvalues.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleStep, ObstacleError

DEFAULT_CAP = 16.0
DELTA_REL_TOL = 1e-9
RESIDUAL_TOL = 1e-9
IMAG_TOL = 1e-9


@dataclass(frozen=True)
class QuarticCoefficients:
    """Coefficients ``(1, c3, c2, c1, c0)`` of the monic quartic, highest degree first."""

    c4: float
    c3: float
    c2: float
    c1: float
    c0: float

    def as_array(self) -> np.ndarray:
        return np.array([self.c4, self.c3, self.c2, self.c1, self.c0], dtype=float)

    def __iter__(self):
        return iter((self.c4, self.c3, self.c2, self.c1, self.c0))

    def __call__(self, x):
        return np.polyval(self.as_array(), x)


class RootKind(str, enum.Enum):
    FOUR_SIMPLE_REAL = "FourSimpleReal"
    TWO_REAL_TWO_COMPLEX = "TwoRealTwoComplex"
    DOUBLE_ROOT = "DoubleRootCase"


@dataclass(frozen=True)
class RootClassification:
    delta: float
    kind: RootKind
    roots: tuple[float, ...]
    scale: float


@dataclass(frozen=True)
class StepSolution:
    x: float
    y: float

    @property
    def total(self) -> float:
        return self.x + self.y


def quartic_coefficients(a: float, b: float, c_prev: float, c_next: float) -> QuarticCoefficients:
    d = float(c_prev) - float(c_next)
    a2 = float(a) ** 2
    b2 = float(b) ** 2
    return QuarticCoefficients(1.0, 2.0 * d, d * d - a2 - b2 / 2.0, -a2 * d, a2 / 4.0 * (a2 - b2))


def _delta_terms(a: float, b: float, d: float) -> list[float]:
    a2, b2, d2 = a * a, b * b, d * d
    a4, a6, a8 = a2 * a2, a2**3, a2**4
    b4, b6, b8, b10 = b2 * b2, b2**3, b2**4, b2**5
    d4, d6 = d2 * d2, d2**3
    return [
        64 * a8 * b4,
        -48 * a6 * b6,
        96 * a6 * b4 * d2,
        -15 * a4 * b8,
        -48 * a4 * b6 * d2,
        48 * a4 * b4 * d4,
        -a2 * b10,
        6 * a2 * b8 * d2,
        -12 * a2 * b6 * d4,
        8 * a2 * b4 * d6,
    ]


def discriminant_value(a: float, b: float, c_prev: float, c_next: float) -> tuple[float, float]:
    """Closed-form discriminant and the size of its largest monomial."""
    terms = _delta_terms(float(a), float(b), float(c_prev) - float(c_next))
    return math.fsum(terms) / 4.0, max(abs(t) for t in terms) / 4.0


def _polish(coeffs: np.ndarray, r: float) -> float:
    p = np.polyval(coeffs, r)
    dp = np.polyval(np.polyder(coeffs), r)
    if abs(dp) > 1e-12 * (1.0 + abs(r)) ** 3:
        step = p / dp
        if abs(step) < 1e-3 * (1.0 + abs(r)):
            return float(r - step)
    return float(r)


def real_roots(coeffs: QuarticCoefficients, keep_near_real: bool = False) -> list[float]:
    """Real roots via companion-matrix eigenvalues, each polished by one Newton step."""
    arr = coeffs.as_array()
    eig = np.roots(arr)
    out = []
    for z in eig:
        if abs(z.imag) < IMAG_TOL * (1.0 + abs(z)):
            out.append(_polish(arr, float(z.real)))
        elif keep_near_real and abs(z.imag) < 1e-4 * (1.0 + abs(z)):
            out.append(float(z.real))
    return sorted(out)


def discriminant(a: float, b: float, c_prev: float, c_next: float) -> RootClassification:
    delta, scale = discriminant_value(a, b, c_prev, c_next)
    if abs(delta) < DELTA_REL_TOL * scale:
        kind = RootKind.DOUBLE_ROOT
    elif delta > 0:
        kind = RootKind.FOUR_SIMPLE_REAL
    else:
        kind = RootKind.TWO_REAL_TWO_COMPLEX
    roots = real_roots(quartic_coefficients(a, b, c_prev, c_next), keep_near_real=kind is RootKind.DOUBLE_ROOT)
    return RootClassification(delta, kind, tuple(roots), scale)


def gain(a: float, c_prev: float, c_next: float, x):
    """Exponent surplus ``g(x)`` left for the obstacle after the branching stretch."""
    return c_prev - c_next + x - a * a / (2.0 * x)


def foc_residual(a: float, b: float, c_prev: float, c_next: float, x: float) -> float:
    g = gain(a, c_prev, c_next, x)
    return 1.0 - b * b * (1.0 + a * a / (2.0 * x * x)) / (2.0 * g * g)


def second_derivative(a: float, b: float, c_prev: float, c_next: float, x: float) -> float:
    """Curvature of ``x + b^2/(2 g(x))`` in ``x``; positive throughout the step domain."""
    g = gain(a, c_prev, c_next, x)
    k = 1.0 + a * a / (2.0 * x * x)
    return b * b / g**3 * k * k + b * b / (2.0 * g * g) * (a * a / x**3)


def domain_roots(a: float, b: float, c_prev: float, c_next: float, cap: float = DEFAULT_CAP) -> list[float]:
    """Real roots lying in the step domain: ``x > 0``, ``g(x) > 0`` and ``x + y <= cap``."""
    a, b, c_prev, c_next = float(a), float(b), float(c_prev), float(c_next)
    out = []
    for r in real_roots(quartic_coefficients(a, b, c_prev, c_next)):
        if r <= 0:
            continue
        g = gain(a, c_prev, c_next, r)
        if g <= 0:
            continue
        if r + b * b / (2.0 * g) <= cap:
            out.append(r)
    return out


def solve_step(a, b, c_prev, c_next, cap: float = DEFAULT_CAP) -> StepSolution:
    """Fastest ``(x, y)`` that turns ``e^{c_prev t}`` particles into ``e^{c_next t}`` above the obstacle.

    Raises :class:`InfeasibleStep` when no stationary point satisfies the
    positivity and cap constraints.
    """
    a, b, c_prev, c_next = float(a), float(b), float(c_prev), float(c_next)
    if a <= 0 or b <= 0:
        raise ObstacleError("step widths must be positive")
    roots = real_roots(quartic_coefficients(a, b, c_prev, c_next))
    for r in reversed(roots):
        if r <= 0:
            break
        g = gain(a, c_prev, c_next, r)
        if g <= 0:
            continue
        y = b * b / (2.0 * g)
        if r + y > cap:
            raise InfeasibleStep(
                f"step (a={a}, b={b}) from exponent {c_prev} to {c_next} needs time {r + y:.6g} > cap {cap}"
            )
        return StepSolution(r, y)
    raise InfeasibleStep(f"no admissible stationary point for a={a}, b={b}, c_prev={c_prev}, c_next={c_next}")


def solve_step_batch(a: float, b: float, c_prev, c_next, cap: float = DEFAULT_CAP):
    """Vectorised :func:`solve_step` over broadcast exponent arrays.

    Returns ``(x, y)`` arrays with ``nan`` where the step is infeasible.
    """
    a, b = float(a), float(b)
    cp, cn = np.broadcast_arrays(np.asarray(c_prev, dtype=float), np.asarray(c_next, dtype=float))
    shape = cp.shape
    d = (cp - cn).ravel()
    a2, b2 = a * a, b * b
    n = d.size
    comp = np.zeros((n, 4, 4))
    comp[:, 0, 0] = -2.0 * d
    comp[:, 0, 1] = -(d * d - a2 - b2 / 2.0)
    comp[:, 0, 2] = a2 * d
    comp[:, 0, 3] = -a2 / 4.0 * (a2 - b2)
    comp[:, 1, 0] = comp[:, 2, 1] = comp[:, 3, 2] = 1.0
    eig = np.linalg.eigvals(comp)
    real = np.abs(eig.imag) < IMAG_TOL * (1.0 + np.abs(eig))
    r = eig.real.copy()
    # one Newton step on the quartic
    c3, c2, c1, c0 = (2.0 * d)[:, None], (d * d - a2 - b2 / 2.0)[:, None], (-a2 * d)[:, None], a2 / 4.0 * (a2 - b2)
    p = (((r + c3) * r + c2) * r + c1) * r + c0
    dp = ((4.0 * r + 3.0 * c3) * r + 2.0 * c2) * r + c1
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(np.abs(dp) > 1e-12 * (1.0 + np.abs(r)) ** 3, p / dp, 0.0)
    step = np.where(np.abs(step) < 1e-3 * (1.0 + np.abs(r)), step, 0.0)
    r = r - step
    with np.errstate(divide="ignore", invalid="ignore"):
        g = d[:, None] + r - a2 / (2.0 * r)
        ok = real & (r > 0) & (g > 0)
        y = np.where(ok, b2 / (2.0 * g), np.inf)
    cand = np.where(ok, r, -np.inf)
    idx = np.argmax(cand, axis=1)
    rows = np.arange(n)
    xs = cand[rows, idx]
    ys = y[rows, idx]
    bad = ~np.isfinite(xs) | (xs + ys > cap)
    xs = np.where(bad, np.nan, xs)
    ys = np.where(bad, np.nan, ys)
    return xs.reshape(shape), ys.reshape(shape)


def step_derivatives(a, b, c_prev, c_next, h: float = 1e-5, cap: float = DEFAULT_CAP) -> tuple[float, float]:
    """Central differences ``(dx/dc_prev, dx/dc_next)`` of the optimal ``x``."""
    xp = solve_step(a, b, c_prev + h, c_next, cap).x
    xm = solve_step(a, b, c_prev - h, c_next, cap).x
    yp = solve_step(a, b, c_prev, c_next + h, cap).x
    ym = solve_step(a, b, c_prev, c_next - h, cap).x
    return (xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h)
