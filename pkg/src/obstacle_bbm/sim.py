"""Monte Carlo simulation of branching Brownian motion among obstacles.

Particles move by Gaussian increments and split in two with probability
``dt`` per step unless they start the step strictly inside an obstacle.
When the population exceeds the cap the lowest particles are dropped.

Randomness is counter-based: every draw is a hash of (particle id, step,
stream) mixed with the seed.  A particle's path therefore does not depend
on which other particles exist, which couples runs with different caps and
makes results independent of array order.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ObstacleError, ProbeOutOfRange
from .landscape import ObstacleLandscape, geometry
from .plan import CrossingPlan

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_INV53 = 2.0**-53
_STREAMS = tuple(np.uint64((k * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF) for k in (1, 2, 3))


def _mix(z: np.ndarray) -> np.ndarray:
    """splitmix64 finaliser, vectorised over uint64 arrays."""
    z = z ^ (z >> _S30)
    z *= _M1
    z ^= z >> _S27
    z *= _M2
    z ^= z >> _S31
    return z


def _uniform(h: np.ndarray) -> np.ndarray:
    """Map hashes to uniforms strictly inside (0, 1)."""
    return ((h >> _S11).astype(np.float64) + 0.5) * _INV53


def _key(value: int) -> np.uint64:
    with np.errstate(over="ignore"):
        return _mix(np.array([value & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]


@dataclass(frozen=True)
class Probe:
    """Count particles with position in ``[lo, hi]`` at ``time``."""

    time: float
    lo: float
    hi: float = math.inf


@dataclass(frozen=True)
class SimConfig:
    landscape: ObstacleLandscape
    horizon: float
    dt: float = 1e-3
    particle_cap: int = 100_000
    seed: int = 0
    record_levels: tuple[tuple[float, float], ...] = ()
    probes: tuple[Probe, ...] = ()
    record_interval: float = 0.1
    mckean_slopes: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.horizon > 0:
            raise ObstacleError("horizon must be positive")
        if not self.dt > 0:
            raise ObstacleError("dt must be positive")
        if self.particle_cap < 1:
            raise ObstacleError("particle cap must be at least 1")
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ObstacleError(f"horizon {self.horizon} is not a whole number of steps of {self.dt}")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class SimResult:
    seed: int
    max_trajectory: tuple[tuple[float, float], ...]
    population: tuple[tuple[float, int], ...]
    final_max: float
    final_population: int
    level_counts: tuple[int, ...]
    probe_counts: tuple[int, ...]
    pruned_mass: int
    mckean: tuple[float, ...] = ()

    @property
    def running_max(self) -> float:
        return self.max_trajectory[-1][1] if self.max_trajectory else self.final_max


def _all_probes(cfg: SimConfig) -> list[Probe]:
    probes = [Probe(x * cfg.horizon, a * cfg.horizon) for x, a in cfg.record_levels]
    probes.extend(cfg.probes)
    for p in probes:
        if not 0 <= p.time <= cfg.horizon + 1e-12:
            raise ProbeOutOfRange(f"probe time {p.time} outside [0, {cfg.horizon}]")
    return probes


def simulate(cfg: SimConfig) -> SimResult:
    geo = geometry(cfg.landscape, cfg.horizon) if cfg.landscape.ell else None
    edges = np.array([e for iv in geo.obstacle_intervals for e in iv]) if geo else np.empty(0)
    dt = float(cfg.dt)
    sqdt = math.sqrt(dt)
    steps = cfg.steps
    cap = int(cfg.particle_cap)
    rec_every = max(1, int(round(cfg.record_interval / dt)))

    probes = _all_probes(cfg)
    probe_at: dict[int, list[int]] = {}
    for i, p in enumerate(probes):
        probe_at.setdefault(int(round(p.time / dt)), []).append(i)
    probe_counts = [0] * len(probes)

    base = _key(cfg.seed)
    pos = np.zeros(1)
    ids = np.array([_key(cfg.seed ^ 0x5EED)], dtype=np.uint64)
    g1, g2, g3 = _STREAMS
    pruned = 0
    running = 0.0
    traj = [(0.0, 0.0)]
    popn = [(0.0, 1)]

    def count(n: int):
        for i in probe_at.get(n, ()):
            p = probes[i]
            probe_counts[i] = int(np.count_nonzero((pos >= p.lo) & (pos <= p.hi)))

    count(0)
    with np.errstate(over="ignore"):
        for n in range(1, steps + 1):
            h = _mix(ids ^ (base + np.uint64(n) * _GOLDEN))
            z = ndtri(_uniform(_mix(h + g1)))
            if edges.size:
                r = np.searchsorted(edges, pos, side="right")
                l = np.searchsorted(edges, pos, side="left")
                active = ~((r & 1).astype(bool) & (l & 1).astype(bool))
            else:
                active = None
            pos = pos + sqdt * z
            split = _uniform(_mix(h + g2)) < dt
            if active is not None:
                split &= active
            if split.any():
                pos = np.concatenate([pos, pos[split]])
                ids = np.concatenate([ids, _mix(h[split] + g3)])
            if pos.size > cap:
                drop = pos.size - cap
                keep = np.argpartition(pos, drop)[drop:]
                keep.sort()
                pos, ids = pos[keep], ids[keep]
                pruned += drop
            top = float(pos.max())
            if top > running:
                running = top
            count(n)
            if n % rec_every == 0 or n == steps:
                t_now = n * dt
                traj.append((t_now, running))
                popn.append((t_now, int(pos.size)))

    n_levels = len(cfg.record_levels)
    mck = tuple(mckean_value(pos, a, cfg.horizon) for a in cfg.mckean_slopes)
    return SimResult(
        seed=cfg.seed,
        max_trajectory=tuple(traj),
        population=tuple(popn),
        final_max=float(pos.max()),
        final_population=int(pos.size),
        level_counts=tuple(probe_counts[:n_levels]),
        probe_counts=tuple(probe_counts[n_levels:]),
        pruned_mass=pruned,
        mckean=mck,
    )


def mckean_value(positions, slope: float, t: float) -> float:
    """``sum_k exp(slope * X_k - t (1 + slope^2 / 2))``, the exponential additive martingale."""
    positions = np.asarray(positions, dtype=float)
    return float(np.exp(slope * positions - t * (1.0 + slope * slope / 2.0)).sum())


# ------------------------------------------------------------ replicas


def thread_count(default: int | None = None) -> int:
    """Replica parallelism from ``OBSTACLE_BBM_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("OBSTACLE_BBM_THREADS", "")
    try:
        n = int(raw) if raw.strip() else 0
    except ValueError:
        n = 0
    if n <= 0:
        n = default or os.cpu_count() or 1
    return max(1, n)


def run_replicas(cfg: SimConfig, n: int, threads: int | None = None) -> list[SimResult]:
    """Replica ``r`` runs with seed ``cfg.seed + r``; results come back in replica order."""
    cfgs = [replace(cfg, seed=cfg.seed + r) for r in range(n)]
    workers = min(n, threads or thread_count())
    if workers <= 1:
        return [simulate(c) for c in cfgs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(simulate, cfgs))


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n: int

    @classmethod
    def of(cls, values: Sequence[float]) -> Estimate:
        v = np.asarray(values, dtype=float)
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
        return cls(float(v.mean()), se, int(v.size))


@dataclass(frozen=True)
class ReplicaSummary:
    final_max: Estimate
    final_max_over_t: Estimate
    level_counts: tuple[Estimate, ...]
    probe_counts: tuple[Estimate, ...]
    population: Estimate
    pruned_mass: Estimate
    results: tuple[SimResult, ...] = field(repr=False)


def summarize(results: Sequence[SimResult], horizon: float) -> ReplicaSummary:
    results = sorted(results, key=lambda r: r.seed)
    fm = [r.final_max for r in results]
    n_lv = len(results[0].level_counts)
    n_pr = len(results[0].probe_counts)
    return ReplicaSummary(
        Estimate.of(fm),
        Estimate.of([v / horizon for v in fm]),
        tuple(Estimate.of([r.level_counts[i] for r in results]) for i in range(n_lv)),
        tuple(Estimate.of([r.probe_counts[i] for r in results]) for i in range(n_pr)),
        Estimate.of([r.final_population for r in results]),
        Estimate.of([r.pruned_mass for r in results]),
        tuple(results),
    )


def replicate(cfg: SimConfig, n: int, threads: int | None = None) -> ReplicaSummary:
    if n < 2:
        raise ObstacleError("replicate needs at least two replicas")
    return summarize(run_replicas(cfg, n, threads), cfg.horizon)


# ------------------------------------------------------- level sets


def expected_level_count(x: float, a: float, t: float) -> float:
    """Exact mean number of particles above ``a t`` at time ``x t`` for binary BBM with rate 1."""
    s = x * t
    return math.exp(s) * float(ndtr(-a * t / math.sqrt(s)))


def level_exponent(x: float, a: float) -> float:
    """Large-``t`` growth rate ``x - a^2/(2x)`` of the level-set size."""
    return x - a * a / (2.0 * x)


def estimate_level_set(cfg: SimConfig, x: float, a: float, replicas: int = 1, threads: int | None = None) -> float:
    """Mean count of particles at or above ``a t`` at time ``x t`` in the homogeneous process."""
    if cfg.landscape.ell:
        raise ProbeOutOfRange("level-set estimates need the homogeneous landscape")
    if not 0 < x <= 1:
        raise ProbeOutOfRange(f"time fraction x={x} must lie in (0, 1]")
    if not 0 < a < math.sqrt(2.0) * x:
        raise ProbeOutOfRange(f"level a={a} must lie in (0, sqrt(2) x) = (0, {math.sqrt(2.0) * x:.6g})")
    c = replace(cfg, record_levels=((x, a),), probes=())
    res = run_replicas(c, replicas, threads) if replicas > 1 else [simulate(c)]
    return float(np.mean([r.level_counts[0] for r in res]))


def homogeneous_max_first_orders(t: float) -> float:
    """Two-term expansion ``sqrt(2) t - 3/(2 sqrt 2) log t`` of the median maximum."""
    return math.sqrt(2.0) * t - 3.0 / (2.0 * math.sqrt(2.0)) * math.log(t)


# ------------------------------------------------------- strategy trace


@dataclass(frozen=True)
class Checkpoint:
    label: str
    obstacle: int
    time: float
    lo: float
    hi: float
    mean_count: float
    positive_fraction: float
    log_rate: float
    plan_exponent: float


def strategy_checkpoints(
    plan: CrossingPlan | None,
    landscape: ObstacleLandscape,
    t: float,
    depth: float = 0.05,
    lag: float = 0.1,
    width: float = math.inf,
) -> list[tuple[str, int, Probe, float]]:
    """Windows the optimal strategy passes through, with the exponent the plan predicts there.

    For obstacle ``m`` the branching-stretch window sits just below its
    lower edge at the end of the planned branching time, and the obstacle
    window starts at its top at the end of the planned crossing.
    Both times are delayed by ``lag * t``.
    """
    if plan is None or landscape.ell == 0:
        return []
    a = [float(v) for v in landscape.a]
    b = [float(v) for v in landscape.b]
    out = []
    base_h = 0.0
    base_t = 0.0
    exps = plan.exponents
    for m in range(landscape.ell):
        ta = (base_t + plan.x_star[m] + lag) * t
        alpha = exps[m] + plan.x_star[m] - a[m] ** 2 / (2 * plan.x_star[m])
        out.append(("branching", m + 1, Probe(ta, (base_h + a[m] - depth) * t, (base_h + a[m]) * t), alpha))
        base_h += a[m] + b[m]
        base_t += plan.x_star[m] + plan.y_star[m]
        tb = (base_t + lag) * t
        out.append(("obstacle", m + 1, Probe(tb, base_h * t, base_h * t + width), exps[m + 1]))
    return out


def strategy_trace(
    cfg: SimConfig,
    plan: CrossingPlan | None,
    replicas: int = 16,
    depth: float = 0.05,
    lag: float = 0.1,
    width: float = math.inf,
    threads: int | None = None,
) -> list[Checkpoint]:
    """Count particles along the planned route and compare with the plan's exponents.

    Checkpoints later than the horizon are dropped.  With no obstacles the
    trace is empty and only the maximum is tracked by :func:`simulate`.
    """
    t = cfg.horizon
    cps = [c for c in strategy_checkpoints(plan, cfg.landscape, t, depth, lag, width) if c[2].time <= t + 1e-12]
    if not cps:
        return []
    c = replace(cfg, probes=tuple(p for _, _, p, _ in cps), record_levels=())
    res = run_replicas(c, replicas, threads)
    out = []
    for i, (label, m, p, expo) in enumerate(cps):
        counts = np.array([r.probe_counts[i] for r in res], dtype=float)
        mean = float(counts.mean())
        out.append(
            Checkpoint(
                label, m, p.time, p.lo, p.hi, mean, float(np.mean(counts > 0)),
                math.log(mean) / t if mean > 0 else -math.inf, expo,
            )
        )
    return out


def above_top_fraction(cfg: SimConfig, replicas: int, threads: int | None = None) -> float:
    """Fraction of replicas with some particle above the last obstacle top at the horizon."""
    top = float(cfg.landscape.height) * cfg.horizon
    res = run_replicas(cfg, replicas, threads)
    return float(np.mean([r.final_max > top for r in res]))
