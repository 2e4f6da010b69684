from . import constants
from .common_types import (
    CommandName,
    ComplexForm,
    ComplexMonomial,
    CostForm,
    Exponent,
    Hierarchy,
    IterationRecord,
    LinearForm,
    ObjectiveMode,
    RealMonomial,
    SolverChoice,
    SolveStatus,
    SweepRow,
)
from .config import AlgorithmSettings, Config, SolverSettings, logger
from .utils import complex_basis_size, real_basis_size, to_json, solver_path_from_env, write_text

__all__ = [
    "AlgorithmSettings",
    "CommandName",
    "ComplexForm",
    "ComplexMonomial",
    "Config",
    "CostForm",
    "Exponent",
    "Hierarchy",
    "IterationRecord",
    "LinearForm",
    "ObjectiveMode",
    "RealMonomial",
    "SolveStatus",
    "SolverChoice",
    "SolverSettings",
    "SweepRow",
    "complex_basis_size",
    "constants",
    "logger",
    "real_basis_size",
    "to_json",
    "utils",
    "solver_path_from_env",
    "write_text",
]
