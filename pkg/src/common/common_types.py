# Standard Library Imports
from typing import Dict, List, Literal, Optional, Tuple, TypedDict

Hierarchy = Literal["real", "complex"]
"""Hierarchy selects whether moments are built over (V_d, V_q) or directly over (V, conj(V))."""


ObjectiveMode = Literal["cost", "loss"]
"""ObjectiveMode is either generation cost (quadratic per generator) or total active losses."""


CostForm = Literal["auto", "schur", "direct", "both"]
"""How quartic cost terms enter the relaxation; "auto" uses Schur at order 1 and both forms above."""


SolverChoice = Literal["embedded", "external"]
"""SDP backend: the built-in interior-point solver or an external SDPA binary."""


SolveStatus = Literal["optimal", "near_optimal", "infeasible", "unbounded", "max_iter", "numerical_failure"]
"""Termination status reported by the SDP solvers."""


CommandName = Literal["solve", "export", "analyze-sparsity", "sweep-h"]
"""CLI subcommands."""


Exponent = Tuple[int, ...]
"""Exponent vector of a monomial."""


RealMonomial = Exponent
"""Monomial xi^alpha over the real voltage components (V_q of the reference bus eliminated)."""


ComplexMonomial = Tuple[Exponent, Exponent]
"""Monomial zeta^alpha conj(zeta)^beta labelled by the pair (alpha, beta)."""


LinearForm = Dict[int, float]
"""Sparse linear form over moment variable ids; key CONSTANT_TERM holds the constant."""


ComplexForm = Dict[int, complex]
"""Linear form with complex coefficients over real variable ids (entries of Hermitian blocks)."""


class IterationRecord(TypedDict):
    """One order-escalation iteration as written to the JSON report and the iteration log."""
    iteration: int
    orders: List[int]
    changed_buses: List[int]
    gamma_max: int
    status: SolveStatus
    objective: float
    max_mismatch_mva: float
    solver_time: float
    max_block_dim: int


class SweepRow(TypedDict):
    """Row of the parameter-h sweep table."""
    case: str
    hierarchy: Hierarchy
    h: int
    status: str
    iterations: int
    solver_time: float
    final_gap: Optional[float]
    gamma_max: int
    normalized_time: Optional[float]
