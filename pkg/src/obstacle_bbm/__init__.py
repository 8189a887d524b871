"""First-order maximum of branching Brownian motion among obstacles."""

from .blocks import BlockDivision, intersect_divisions, is_admissible, optimal_blocks, ratio, s_indices
from .errors import (
    DomainViolation,
    EmptyLandscape,
    IndexRange,
    InfeasibleStep,
    MismatchedLength,
    NoFeasiblePoint,
    NonPositiveWidth,
    ObstacleError,
    ProbeOutOfRange,
)
from .foc import discriminant, quartic_coefficients, solve_step, step_derivatives
from .landscape import ObstacleLandscape, RegionGeometry, branching_rate, geometry, load_landscape, validate_landscape
from .oracle import TimeAllocation, brute_force_max_D, brute_force_min_time_Dhat, objective
from .plan import CrossingPlan, FrontierEstimate, block_constants, crossing_plan, feasibility, frontier
from .sim import SimConfig, SimResult, estimate_level_set, replicate, simulate, strategy_trace

__all__ = [
    "BlockDivision",
    "CrossingPlan",
    "DomainViolation",
    "EmptyLandscape",
    "FrontierEstimate",
    "IndexRange",
    "InfeasibleStep",
    "MismatchedLength",
    "NoFeasiblePoint",
    "NonPositiveWidth",
    "ObstacleError",
    "ObstacleLandscape",
    "ProbeOutOfRange",
    "RegionGeometry",
    "SimConfig",
    "SimResult",
    "TimeAllocation",
    "block_constants",
    "branching_rate",
    "brute_force_max_D",
    "brute_force_min_time_Dhat",
    "crossing_plan",
    "discriminant",
    "estimate_level_set",
    "feasibility",
    "frontier",
    "geometry",
    "intersect_divisions",
    "is_admissible",
    "load_landscape",
    "objective",
    "optimal_blocks",
    "quartic_coefficients",
    "ratio",
    "replicate",
    "s_indices",
    "simulate",
    "solve_step",
    "step_derivatives",
    "strategy_trace",
    "validate_landscape",
]
