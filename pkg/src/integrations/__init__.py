from .external_solver import (
    ExternalSolverConfig,
    ExternalSolverError,
    UnretryableExternalSolverError,
    solve_with_external,
)

__all__ = [
    "ExternalSolverConfig",
    "ExternalSolverError",
    "UnretryableExternalSolverError",
    "solve_with_external",
]
