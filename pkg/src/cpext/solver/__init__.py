"""Standard-form semidefinite programming with certified statuses."""

from .engine import check_farkas, check_point, check_ray, feasibility, kkt_report, polish, solve
from .model import Free, HermFree, HermPSD, Model, NonNeg, RowGroup
from .problem import (
    DEFAULT_TOLERANCES,
    DUAL_INFEASIBLE,
    FEASIBLE,
    INFEASIBLE,
    MARGINAL,
    NUMERIC_FAILURE,
    OPTIMAL,
    PRIMAL_INFEASIBLE,
    FeasibilityResult,
    SdpProblem,
    SdpSolution,
    Tolerances,
)

__all__ = [
    "DEFAULT_TOLERANCES",
    "DUAL_INFEASIBLE",
    "FEASIBLE",
    "INFEASIBLE",
    "MARGINAL",
    "NUMERIC_FAILURE",
    "OPTIMAL",
    "PRIMAL_INFEASIBLE",
    "FeasibilityResult",
    "Free",
    "HermFree",
    "HermPSD",
    "Model",
    "NonNeg",
    "RowGroup",
    "SdpProblem",
    "SdpSolution",
    "Tolerances",
    "check_farkas",
    "check_point",
    "check_ray",
    "feasibility",
    "kkt_report",
    "polish",
    "solve",
]
