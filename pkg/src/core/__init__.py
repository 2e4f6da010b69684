from .feasibility import FeasibilityReport, Violation, verify_feasibility
from .local_solver import LocalSolution, solve_local
from .orchestrator import (
    AlgorithmError,
    ApproximatePoint,
    BoundOnly,
    GlobalSolution,
    InfeasibleRelaxation,
    MismatchReport,
    RankConditionError,
    RelaxationResult,
    RelaxationState,
    approx_solution,
    check_rank1,
    extract,
    increment_orders,
    mismatch,
    rank_one_approximation,
    run_algorithm1,
    solve_relaxation,
)

__all__ = [
    "AlgorithmError",
    "ApproximatePoint",
    "BoundOnly",
    "FeasibilityReport",
    "GlobalSolution",
    "InfeasibleRelaxation",
    "LocalSolution",
    "MismatchReport",
    "RankConditionError",
    "RelaxationResult",
    "RelaxationState",
    "Violation",
    "approx_solution",
    "check_rank1",
    "extract",
    "increment_orders",
    "mismatch",
    "rank_one_approximation",
    "run_algorithm1",
    "solve_local",
    "solve_relaxation",
    "verify_feasibility",
]
