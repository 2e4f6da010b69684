# Standard Library Imports
from pathlib import Path

# Local Application Imports
from .common_types import Hierarchy

CONSTANT_TERM: int = -1

REAL: Hierarchy = "real"
COMPLEX: Hierarchy = "complex"
HIERARCHIES = (REAL, COMPLEX)

# MATPOWER bus types
BUS_TYPE_PQ: int = 1
BUS_TYPE_PV: int = 2
BUS_TYPE_REF: int = 3
BUS_TYPE_ISOLATED: int = 4

# MATPOWER polynomial cost model id
POLYNOMIAL_COST_MODEL: int = 2

DEFAULT_EPS_MVA: float = 1.0
DEFAULT_H_REAL: int = 4
DEFAULT_H_COMPLEX: int = 7
DEFAULT_MAX_ITERATIONS: int = 15
DEFAULT_MAX_GAMMA: int = 3
DEFAULT_WALL_TIME_S: float = 3600.0
DEFAULT_RANK_TOL: float = 1e-5

DEFAULT_SOLVER_TOL: float = 1e-8
DEFAULT_SOLVER_MAX_ITER: int = 200
DEFAULT_STEP_FRACTION: float = 0.99
DEFAULT_NEAR_OPTIMAL_FACTOR: float = 1e3

DEFAULT_EXTERNAL_TIMEOUT_S: float = 600.0

MAX_RELAXATION_ORDER: int = 3

# Voltage tolerance used when reporting feasibility against an MVA tolerance
VOLTAGE_TOLERANCE_PU: float = 1e-4

EXIT_GLOBAL_OPTIMAL: int = 0
EXIT_ERROR: int = 1
EXIT_USAGE: int = 2
EXIT_BOUND_ONLY: int = 3
EXIT_INFEASIBLE: int = 4

CASES_DIR: Path = Path(__file__).resolve().parents[2] / "data" / "cases"
