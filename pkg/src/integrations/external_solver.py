# Standard Library Imports
import logging
import os
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

# Third-Party Library Imports
from tenacity import after_log, before_log, retry, retry_if_exception, stop_after_attempt, wait_fixed

# Local Application Imports
from src.common import SolverSettings, SolveStatus, logger, solver_path_from_env, write_text
from src.common.constants import DEFAULT_EXTERNAL_TIMEOUT_S
from src.sdp import SDPFormatError, SDPProblem, SDPSolution, export_sdpa, import_sdpa_solution

# CSDP exit codes. Its primal is the dual of the exported problem, so their infeasibility labels swap.
_EXIT_STATUS: Dict[int, Optional[SolveStatus]] = {
    0: None,
    1: "unbounded",
    2: "infeasible",
    3: "near_optimal",
    4: "max_iter",
}


@dataclass(frozen=True)
class ExternalSolverConfig:
    """Immutable configuration for an external SDPA-format solver binary."""

    binary: str = field(init=False)
    timeout: float = field(init=False)

    def __post_init__(self):
        binary = solver_path_from_env("MOMENT_OPF_SDPA_SOLVER")
        timeout = float(os.getenv("MOMENT_OPF_SDPA_TIMEOUT", str(DEFAULT_EXTERNAL_TIMEOUT_S)))
        if timeout <= 0:
            raise ValueError(f"External solver timeout must be positive, got {timeout}.")
        object.__setattr__(self, "binary", binary)
        object.__setattr__(self, "timeout", timeout)


class ExternalSolverError(Exception):
    """Custom exception for errors raised while running the external SDP solver."""

    def __init__(self, message: str, original_exception: Optional[Exception] = None):
        super().__init__(message)
        self.original_exception = original_exception
        self.message = message


class UnretryableExternalSolverError(ExternalSolverError):
    """Custom exception for external solver errors that a second attempt cannot fix."""

    def __init__(self, message: str, original_exception: Optional[Exception] = None):
        super().__init__(message, original_exception)
        self.original_exception = original_exception
        self.message = message


@retry(
    retry=retry_if_exception(lambda e: not isinstance(e, UnretryableExternalSolverError)),
    stop=stop_after_attempt(2),
    wait=wait_fixed(1),
    before=before_log(logger, logging.DEBUG),
    after=after_log(logger, logging.DEBUG),
    reraise=True,
)
def solve_with_external(
    problem: SDPProblem, config: ExternalSolverConfig, settings: Optional[SolverSettings] = None
) -> SDPSolution:
    """
    Solve an SDP with an external binary following the `solver in.dat-s out.sol` convention.

    The problem is exported to SDPA sparse text, the binary runs in a temporary directory, and the solution
    file is parsed with every residual recomputed from `problem`.

    Args:
        problem (SDPProblem): Problem to solve.
        config (ExternalSolverConfig): Binary path and timeout.
        settings (Optional[SolverSettings]): Tolerances for the residual-based status.

    Returns:
        SDPSolution: Parsed solution.

    Raises:
        UnretryableExternalSolverError: If the binary is missing or produced no usable output.
        ExternalSolverError: On timeouts and other failures worth one retry.
    """
    logger.debug(f"Running external SDP solver {config.binary} on {problem.num_vars} variables.")
    start_time = time.time()
    with tempfile.TemporaryDirectory(prefix="moment_opf_") as workdir:
        input_path = write_text(Path(workdir) / "problem.dat-s", export_sdpa(problem))
        output_path = Path(workdir) / "problem.sol"
        try:
            completed = subprocess.run(
                [config.binary, str(input_path), str(output_path)],
                capture_output=True,
                text=True,
                timeout=config.timeout,
                check=False,
            )
        except FileNotFoundError as e:
            logger.error(f"External solver binary not found: {config.binary}")
            raise UnretryableExternalSolverError(f"Solver binary {config.binary} not found.", e) from e
        except subprocess.TimeoutExpired as e:
            logger.error(f"External solver timed out after {config.timeout:.0f} seconds.")
            raise ExternalSolverError(f"External solver timed out after {config.timeout:.0f} seconds.", e) from e

        elapsed_time = time.time() - start_time
        logger.info(f"External solver finished in {elapsed_time:.2f} seconds with exit code {completed.returncode}.")

        if not output_path.exists():
            raise UnretryableExternalSolverError(
                f"External solver exited with code {completed.returncode} and wrote no solution: "
                f"{completed.stderr.strip() or completed.stdout.strip()[-200:]}"
            )
        try:
            status = _EXIT_STATUS.get(completed.returncode, "numerical_failure")
            solution = import_sdpa_solution(output_path.read_text(encoding="utf-8"), problem, status, settings)
        except SDPFormatError as e:
            logger.error(f"Could not parse external solver output: {e.message}")
            raise UnretryableExternalSolverError(f"Unparsable solver output: {e.message}", e) from e

    return SDPSolution(
        status=solution.status,
        y=solution.y,
        objective=solution.objective,
        dual_objective=solution.dual_objective,
        min_eigenvalues=solution.min_eigenvalues,
        residuals=solution.residuals,
        duals=solution.duals,
        iterations=solution.iterations,
        solve_time=elapsed_time,
        certificate=solution.certificate,
    )
