# Standard Library Imports
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, ClassVar, Optional

# Third-Party Library Imports
from dotenv import load_dotenv

# Local Application Imports
from .constants import (
    DEFAULT_EPS_MVA,
    DEFAULT_H_COMPLEX,
    DEFAULT_H_REAL,
    DEFAULT_MAX_GAMMA,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_NEAR_OPTIMAL_FACTOR,
    DEFAULT_RANK_TOL,
    DEFAULT_SOLVER_MAX_ITER,
    DEFAULT_SOLVER_TOL,
    DEFAULT_STEP_FRACTION,
    DEFAULT_WALL_TIME_S,
    MAX_RELAXATION_ORDER,
)

if TYPE_CHECKING:
    from src.integrations import ExternalSolverConfig

logger: logging.Logger = logging.getLogger("moment_opf")


@dataclass(frozen=True)
class SolverSettings:
    """Immutable settings for the embedded interior-point SDP solver."""

    tol: float = DEFAULT_SOLVER_TOL
    max_iter: int = DEFAULT_SOLVER_MAX_ITER
    detect_infeasibility: bool = True
    step_fraction: float = DEFAULT_STEP_FRACTION
    near_optimal_factor: float = DEFAULT_NEAR_OPTIMAL_FACTOR

    def __post_init__(self) -> None:
        """Validate tolerance, iteration limit and step fraction."""
        if not 0.0 < self.tol < 1.0:
            raise ValueError(f"Solver tolerance must lie in (0, 1), got {self.tol}.")
        if self.max_iter < 1:
            raise ValueError(f"Solver iteration limit must be positive, got {self.max_iter}.")
        if not 0.0 < self.step_fraction < 1.0:
            raise ValueError(f"Step fraction must lie in (0, 1), got {self.step_fraction}.")
        if self.near_optimal_factor < 1.0:
            raise ValueError("Near-optimal factor must be at least 1.")


@dataclass(frozen=True)
class AlgorithmSettings:
    """Immutable settings for the order-escalation loop."""

    eps_mva: float = DEFAULT_EPS_MVA
    h_real: int = DEFAULT_H_REAL
    h_complex: int = DEFAULT_H_COMPLEX
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    max_gamma: int = DEFAULT_MAX_GAMMA
    wall_time_s: float = DEFAULT_WALL_TIME_S
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self) -> None:
        """Validate the escalation parameters."""
        if self.eps_mva <= 0:
            raise ValueError(f"Mismatch tolerance must be positive, got {self.eps_mva}.")
        if self.h_real < 1 or self.h_complex < 1:
            raise ValueError("Parameter h must be at least 1.")
        if self.max_iterations < 1:
            raise ValueError("Iteration cap must be at least 1.")
        if not 1 <= self.max_gamma <= MAX_RELAXATION_ORDER:
            raise ValueError(f"Order cap must lie in [1, {MAX_RELAXATION_ORDER}], got {self.max_gamma}.")
        if self.wall_time_s <= 0:
            raise ValueError("Wall-time cap must be positive.")

    def default_h(self, hierarchy: str) -> int:
        """Return the default h for a hierarchy."""
        return self.h_real if hierarchy == "real" else self.h_complex


@dataclass(frozen=True)
class Config:
    _config: ClassVar[Optional["Config"]] = None
    app_env: str
    debug: bool
    output_dir: Path
    solver_settings: SolverSettings
    algorithm_settings: AlgorithmSettings
    external_solver_config: Optional["ExternalSolverConfig"]

    @classmethod
    def get(cls) -> "Config":
        if cls._config:
            return cls._config

        _config = Config._init()
        cls._config = _config
        return _config

    @staticmethod
    def _init():
        app_env = os.getenv("APP_ENV", "prod").lower()
        if app_env not in {"dev", "prod"}:
            app_env = "prod"

        # In development, load environment variables from .env file
        if app_env == "dev" and Path(".env").exists():
            load_dotenv(".env", override=True)

        debug = app_env == "dev" or os.getenv("DEBUG", "false").lower() == "true"

        logging.basicConfig(
            level=logging.DEBUG if debug else logging.INFO,
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        )
        logger.info(f'Toolkit running in "{app_env}" mode.')
        logger.info(f"Debug mode is {'enabled' if debug else 'disabled'}.")

        output_dir = Path(os.getenv("MOMENT_OPF_OUTPUT_DIR", str(Path.cwd() / "output")))
        logger.debug(f"Output directory set to {output_dir}")

        solver_settings = SolverSettings(
            tol=float(os.getenv("MOMENT_OPF_TOL", str(DEFAULT_SOLVER_TOL))),
            max_iter=int(os.getenv("MOMENT_OPF_MAX_ITER", str(DEFAULT_SOLVER_MAX_ITER))),
        )

        from src.integrations import ExternalSolverConfig

        external_solver_config = None
        if os.getenv("MOMENT_OPF_SDPA_SOLVER"):
            external_solver_config = ExternalSolverConfig()
            logger.debug(f"External SDPA solver configured at {external_solver_config.binary}")

        return Config(
            app_env=app_env,
            debug=debug,
            output_dir=output_dir,
            solver_settings=solver_settings,
            algorithm_settings=AlgorithmSettings(),
            external_solver_config=external_solver_config,
        )
