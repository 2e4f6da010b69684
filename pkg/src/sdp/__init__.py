from .interior_point import solve
from .presolve import EqualityOrigin, PresolveResult, presolve
from .problem import (
    DualVariables,
    KKTResiduals,
    SDPBlock,
    SDPError,
    SDPProblem,
    SDPSolution,
    SolverFailure,
    block_min_eigenvalues,
    dual_objective,
    make_block,
    residuals,
    solution_from_point,
)
from .sdpa import SDPFormatError, export_sdpa, import_sdpa, import_sdpa_solution

__all__ = [
    "DualVariables",
    "EqualityOrigin",
    "KKTResiduals",
    "PresolveResult",
    "SDPBlock",
    "SDPError",
    "SDPFormatError",
    "SDPProblem",
    "SDPSolution",
    "SolverFailure",
    "block_min_eigenvalues",
    "dual_objective",
    "export_sdpa",
    "import_sdpa",
    "import_sdpa_solution",
    "make_block",
    "presolve",
    "residuals",
    "solution_from_point",
    "solve",
]
