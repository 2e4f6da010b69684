"""
orchestrator.py

Iterative solution of sparse moment relaxations: solve at the current per-bus orders, measure how far the
rank-one approximation of the first-order moments is from the lifted power injections, raise the orders of
the worst buses, and extract the voltages once every mismatch is within tolerance.
"""

# Standard Library Imports
import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

# Third-Party Library Imports
import numpy as np

# Local Application Imports
from src.common import AlgorithmSettings, Hierarchy, IterationRecord, SolverSettings, logger
from src.common.constants import DEFAULT_RANK_TOL
from src.integrations import ExternalSolverConfig, ExternalSolverError, solve_with_external
from src.network import HermitianMatrixSet, NetworkCase, build_matrices, objective_polynomial
from src.polynomial import VariableLayout
from src.relaxation import (
    OrderTooLowError,
    Relaxation,
    RelaxationOptions,
    assemble_complex,
    assemble_real,
    evaluate_form,
    sparsity_structure,
)
from src.sdp import SDPError, SDPProblem, SDPSolution, solve
from src.sparsity import ChordalStructure

from .feasibility import FeasibilityReport, verify_feasibility

ASSEMBLERS = {"real": assemble_real, "complex": assemble_complex}
ACCEPTED_STATUSES = ("optimal", "near_optimal")


class AlgorithmError(Exception):
    """Custom exception for failures of the order-escalation loop, with the iteration they happened in."""

    def __init__(self, message: str, iteration: int = 0, original_exception: Optional[Exception] = None):
        super().__init__(message)
        self.original_exception = original_exception
        self.message = message
        self.iteration = iteration


class InfeasibleRelaxation(AlgorithmError):
    """The relaxation is infeasible, which certifies that the OPF problem is infeasible."""


class RankConditionError(AlgorithmError):
    """The moment matrix of a clique is not numerically rank one; more iterations are needed."""

    def __init__(self, message: str, clique: int, ratio: float, iteration: int = 0):
        super().__init__(message, iteration)
        self.clique = clique
        self.ratio = ratio


@dataclass(frozen=True)
class RelaxationState:
    """
    Per-bus relaxation orders and the iteration log.

    Attributes:
        orders (Tuple[int, ...]): gamma_i of every bus.
        gamma_max (int): Largest order a bus may reach without raising the cap; never below max(orders).
        iteration (int): Number of completed solves.
        changed (Tuple[int, ...]): Buses incremented by the last escalation step.
        log (Tuple[IterationRecord, ...]): One record per completed solve.
    """

    orders: Tuple[int, ...]
    gamma_max: int = 1
    iteration: int = 0
    changed: Tuple[int, ...] = ()
    log: Tuple[IterationRecord, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.orders:
            raise ValueError("Relaxation state needs at least one bus.")
        if min(self.orders) < 1:
            raise ValueError(f"Relaxation orders must be at least 1, got {list(self.orders)}.")
        if self.gamma_max < max(self.orders):
            raise ValueError(f"gamma_max {self.gamma_max} is below the largest order {max(self.orders)}.")

    @classmethod
    def initial(cls, num_buses: int) -> "RelaxationState":
        return cls(orders=(1,) * num_buses)

    def record(self, entry: IterationRecord) -> "RelaxationState":
        return replace(self, iteration=self.iteration + 1, log=self.log + (entry,))


class ApproximatePoint(NamedTuple):
    """Rank-one approximation of the first-order moments, stitched across cliques."""
    voltages: np.ndarray
    lambda_1: Tuple[float, ...]
    eig_ratios: Tuple[float, ...]


@dataclass(frozen=True)
class MismatchReport:
    """
    Per-bus power injection mismatch between the approximate point and the lifted injections.

    Attributes:
        mismatch_mva (np.ndarray): S_i^mis in MVA, nonnegative.
        voltages (np.ndarray): z^approx as complex voltages.
        lambda_1 (Tuple[float, ...]): Largest eigenvalue of each clique's first-order block.
        eig_ratios (Tuple[float, ...]): lambda_2 / lambda_1 of each clique's first-order block.
    """

    mismatch_mva: np.ndarray
    voltages: np.ndarray
    lambda_1: Tuple[float, ...]
    eig_ratios: Tuple[float, ...]

    @property
    def max_mismatch(self) -> float:
        return float(np.max(self.mismatch_mva)) if self.mismatch_mva.size else 0.0

    @property
    def worst_bus(self) -> int:
        return int(np.argmax(self.mismatch_mva))


@dataclass(frozen=True)
class GlobalSolution:
    """
    Globally optimal operating point certified by an exact relaxation.

    Attributes:
        voltages (np.ndarray): V* with the reference angle at zero.
        objective (float): Objective at V*.
        bound (float): Best lower bound from the relaxations solved.
        gap (float): (objective - bound) / max(1, |objective|).
        feasibility (FeasibilityReport): Constraint violations at V*.
        state (RelaxationState): Final orders and iteration log.
        mismatch (MismatchReport): Report of the last iteration.
    """

    voltages: np.ndarray
    objective: float
    bound: float
    gap: float
    feasibility: FeasibilityReport
    state: RelaxationState
    mismatch: MismatchReport


@dataclass(frozen=True)
class BoundOnly:
    """Termination on a cap: only a lower bound is certified."""

    bound: float
    reason: str
    state: RelaxationState
    mismatch: Optional[MismatchReport]


class RelaxationResult(NamedTuple):
    relaxation: Relaxation
    problem: SDPProblem
    solution: SDPSolution


def solve_relaxation(
    case: NetworkCase,
    hierarchy: Hierarchy,
    orders: Sequence[int],
    options: Optional[RelaxationOptions] = None,
    settings: Optional[SolverSettings] = None,
    structure: Optional[ChordalStructure] = None,
    matrices: Optional[HermitianMatrixSet] = None,
    external: Optional[ExternalSolverConfig] = None,
) -> RelaxationResult:
    """
    Assemble one relaxation and solve it.

    Args:
        case (NetworkCase): Network data.
        hierarchy (Hierarchy): "real" or "complex".
        orders (Sequence[int]): Per-bus relaxation orders.
        options (Optional[RelaxationOptions]): Objective and constraint forms.
        settings (Optional[SolverSettings]): Solver tolerances.
        structure (Optional[ChordalStructure]): Cliques; computed from the options when omitted.
        matrices (Optional[HermitianMatrixSet]): Precomputed network matrices.
        external (Optional[ExternalSolverConfig]): Solve with an external binary instead of the embedded solver.

    Returns:
        RelaxationResult: The relaxation, its SDP and the solution, whatever its status.
    """
    if hierarchy not in ASSEMBLERS:
        raise ValueError(f"Unknown hierarchy {hierarchy!r}; expected 'real' or 'complex'.")
    options = options or RelaxationOptions()
    structure = structure or sparsity_structure(case, options)
    relaxation = ASSEMBLERS[hierarchy](case, structure, orders, options, matrices)
    problem = relaxation.to_sdp_problem()
    if external is not None:
        solution = solve_with_external(problem, external, settings)
    else:
        solution = solve(problem, settings)
    logger.info(
        f"{hierarchy.capitalize()} relaxation at gamma_max {relaxation.gamma_max}: {solution.status}, "
        f"objective {solution.objective:.8g} in {solution.solve_time:.2f}s."
    )
    return RelaxationResult(relaxation, problem, solution)


def rank_one_approximation(matrix: np.ndarray) -> Tuple[np.ndarray, float, float]:
    """
    sqrt(lambda_1) eta_1 of a symmetric or Hermitian PSD matrix, with its eigenvalue ratio.

    The eigenvector is normalized so its entry of largest modulus is real and positive.

    Args:
        matrix (np.ndarray): Square symmetric or Hermitian matrix.

    Returns:
        Tuple of the scaled eigenvector, lambda_1 and lambda_2 / lambda_1 (0 for 1x1 matrices).

    Raises:
        AlgorithmError: If lambda_1 is not positive.
    """
    values, vectors = np.linalg.eigh(matrix)
    lambda_1 = float(values[-1])
    if lambda_1 <= 0:
        raise AlgorithmError(f"Largest eigenvalue {lambda_1:.3e} of the first-order moment block is not positive.")
    eta = vectors[:, -1]
    pivot = eta[int(np.argmax(np.abs(eta)))]
    eta = eta * (np.conj(pivot) / abs(pivot))
    ratio = max(float(values[-2]), 0.0) / lambda_1 if len(values) > 1 else 0.0
    return np.sqrt(lambda_1) * eta, lambda_1, ratio


def check_rank1(matrix: np.ndarray, tol_ratio: float = DEFAULT_RANK_TOL) -> Tuple[bool, float]:
    """True when lambda_2 / lambda_1 < tol_ratio; returns the ratio as well."""
    values = np.linalg.eigvalsh(matrix)
    lambda_1 = float(values[-1])
    if lambda_1 <= 0:
        return False, float("inf")
    ratio = max(float(values[-2]), 0.0) / lambda_1 if len(values) > 1 else 0.0
    return ratio < tol_ratio, ratio


def _clique_order(relaxation: Relaxation) -> List[int]:
    """Cliques in breadth-first order over the clique tree, starting at one holding the reference bus."""
    structure = relaxation.structure
    roots = structure.cliques_containing([relaxation.ref_bus]) + list(range(len(structure.cliques)))
    seen: List[int] = []
    for root in roots:
        if root in seen:
            continue
        queue = deque([root])
        seen.append(root)
        while queue:
            current = queue.popleft()
            for neighbor in structure.tree_neighbors(current):
                if neighbor not in seen:
                    seen.append(neighbor)
                    queue.append(neighbor)
    return seen


def _local_voltages(relaxation: Relaxation, variables: Sequence[int], vector: np.ndarray) -> Dict[int, complex]:
    if relaxation.kind == "complex":
        return {bus: complex(value) for bus, value in zip(variables, vector)}
    n = len(relaxation.orders)
    layout = VariableLayout(n, relaxation.ref_bus)
    local: Dict[int, complex] = {}
    for position, value in zip(variables, np.real(vector)):
        bus = layout.bus_of(position)
        local[bus] = local.get(bus, 0j) + (float(value) if position < n else 1j * float(value))
    return local


def _alignment(assigned: Dict[int, complex], local: Dict[int, complex], real: bool) -> complex:
    """Unit factor that best aligns `local` with the voltages already assigned on the overlap."""
    inner = sum(np.conj(assigned[bus]) * value for bus, value in local.items() if bus in assigned)
    if abs(inner) == 0:
        return 1.0
    if real:
        return 1.0 if inner.real >= 0 else -1.0
    return complex(np.conj(inner) / abs(inner))


def approx_solution(relaxation: Relaxation, y: np.ndarray) -> ApproximatePoint:
    """
    z^approx from the first-order moment blocks of every clique.

    Each clique contributes sqrt(lambda_1) eta_1 of its degree-one rows. Cliques are visited along the clique
    tree and each is rotated (complex) or sign-flipped (real) to agree with the buses already placed; the
    result is rotated so the reference bus has angle zero.

    Args:
        relaxation (Relaxation): Assembled relaxation.
        y (np.ndarray): Moment vector of its solution.

    Returns:
        ApproximatePoint: Complex voltages and per-clique eigenvalue data.
    """
    n = len(relaxation.orders)
    assigned: Dict[int, complex] = {}
    lambdas: Dict[int, float] = {}
    ratios: Dict[int, float] = {}
    by_clique = {first.clique: first for first in relaxation.first_order}
    for clique in _clique_order(relaxation):
        first = by_clique[clique]
        block = relaxation.blocks[first.block_index].evaluate(y)
        rows = list(first.rows)
        vector, lambdas[clique], ratios[clique] = rank_one_approximation(block[np.ix_(rows, rows)])
        local = _local_voltages(relaxation, first.variables, vector)
        factor = _alignment(assigned, local, relaxation.kind == "real")
        for bus, value in local.items():
            assigned.setdefault(bus, factor * value)

    voltages = np.array([assigned.get(k, 0j) for k in range(n)], dtype=complex)
    reference = voltages[relaxation.ref_bus]
    if abs(reference) > 0:
        voltages = voltages * np.exp(-1j * np.angle(reference))
    order = sorted(lambdas)
    return ApproximatePoint(voltages, tuple(lambdas[c] for c in order), tuple(ratios[c] for c in order))


def mismatch(
    case: NetworkCase,
    relaxation: Relaxation,
    y: np.ndarray,
    point: Optional[ApproximatePoint] = None,
    matrices: Optional[HermitianMatrixSet] = None,
) -> MismatchReport:
    """
    Power injection mismatch of every bus in MVA.

    S_i^mis = |(f_Pi(z) - L(f_Pi)) + j (f_Qi(z) - L(f_Qi))| * base_mva, with z the approximate point and
    L(f) the lifted injection evaluated at the solution moments.

    Args:
        case (NetworkCase): Network the relaxation was built for.
        relaxation (Relaxation): Assembled relaxation.
        y (np.ndarray): Solution moment vector.
        point (Optional[ApproximatePoint]): Approximate point; computed from y when omitted.
        matrices (Optional[HermitianMatrixSet]): Precomputed network matrices.

    Returns:
        MismatchReport: Mismatches with the point they were measured at.
    """
    matrices = matrices or build_matrices(case)
    point = point or approx_solution(relaxation, y)
    z = point.voltages
    values = np.zeros(case.n)
    for k, (p_form, q_form) in enumerate(relaxation.injection_forms):
        p_point = float(np.real(np.conj(z) @ matrices.injection_p[k] @ z))
        q_point = float(np.real(np.conj(z) @ matrices.injection_q[k] @ z))
        p_lifted = float(np.real(evaluate_form(p_form, y)))
        q_lifted = float(np.real(evaluate_form(q_form, y)))
        values[k] = abs(complex(p_point - p_lifted, q_point - q_lifted)) * case.base_mva
    return MismatchReport(values, z, point.lambda_1, point.eig_ratios)


def increment_orders(state: RelaxationState, report: MismatchReport, h: int, eps_mva: float) -> RelaxationState:
    """
    Raise the orders of up to h buses with the largest mismatches.

    Candidates are buses with gamma_i < gamma_max and S_i^mis > eps. When there are none, gamma_max is raised
    by one and the candidates are all buses with S_i^mis > eps. Ties go to the lowest bus index. The state is
    returned unchanged when every mismatch is within eps.

    Args:
        state (RelaxationState): Current orders.
        report (MismatchReport): Mismatches of the last solve.
        h (int): Maximum number of buses to increment, at least 1.
        eps_mva (float): Mismatch tolerance in MVA, positive.

    Returns:
        RelaxationState: New orders; `changed` lists the incremented buses.
    """
    if h < 1:
        raise ValueError(f"Parameter h must be at least 1, got {h}.")
    if eps_mva <= 0:
        raise ValueError(f"Mismatch tolerance must be positive, got {eps_mva}.")
    if len(report.mismatch_mva) != len(state.orders):
        raise ValueError("Mismatch report and state cover different numbers of buses.")

    values = report.mismatch_mva
    over = [k for k in range(len(values)) if values[k] > eps_mva]
    if not over:
        return replace(state, changed=())

    gamma_max = state.gamma_max
    candidates = [k for k in over if state.orders[k] < gamma_max]
    if not candidates:
        gamma_max += 1
        candidates = over
    chosen = sorted(sorted(candidates, key=lambda k: (-values[k], k))[:h])

    orders = list(state.orders)
    for k in chosen:
        orders[k] += 1
    return replace(state, orders=tuple(orders), gamma_max=gamma_max, changed=tuple(chosen))


def extract(relaxation: Relaxation, y: np.ndarray, tol_ratio: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """
    Voltages of an exact relaxation.

    Every clique's block over its degree-one monomials must pass the rank check; the voltages are then the
    stitched rank-one point with the reference angle at zero. The constant row is left out, since a
    symmetric solution has zero first moments and the block over the constant row is then never rank one.

    Raises:
        RankConditionError: If a clique's block is not numerically rank one.
    """
    for first in relaxation.first_order:
        block = relaxation.blocks[first.block_index].evaluate(y)
        rows = list(first.rows)
        ok, ratio = check_rank1(block[np.ix_(rows, rows)], tol_ratio)
        if not ok:
            raise RankConditionError(
                f"Clique {first.clique} fails the rank condition (ratio {ratio:.3e} >= {tol_ratio:.1e}); "
                "continue raising relaxation orders.",
                first.clique,
                ratio,
            )
    return approx_solution(relaxation, y).voltages


def _record(
    state: RelaxationState, result: RelaxationResult, report: Optional[MismatchReport]
) -> IterationRecord:
    return IterationRecord(
        iteration=state.iteration + 1,
        orders=list(state.orders),
        changed_buses=list(state.changed),
        gamma_max=result.relaxation.gamma_max,
        status=result.solution.status,
        objective=float(result.solution.objective),
        max_mismatch_mva=report.max_mismatch if report is not None else float("nan"),
        solver_time=float(result.solution.solve_time),
        max_block_dim=result.relaxation.census().max_block_dim,
    )


def run_algorithm1(
    case: NetworkCase,
    hierarchy: Hierarchy,
    settings: Optional[AlgorithmSettings] = None,
    h: Optional[int] = None,
    options: Optional[RelaxationOptions] = None,
    solver_settings: Optional[SolverSettings] = None,
    external: Optional[ExternalSolverConfig] = None,
) -> Union[GlobalSolution, BoundOnly]:
    """
    Solve the OPF problem globally by escalating per-bus relaxation orders.

    Starting from order one everywhere, each iteration solves the relaxation, computes the injection
    mismatches and raises the orders of up to h buses. Once every mismatch is within `settings.eps_mva` the
    voltages are extracted and checked against the constraints. The loop stops with a bound only on the
    iteration cap, the order cap or the wall-time cap.

    Args:
        case (NetworkCase): Network data.
        hierarchy (Hierarchy): "real" or "complex".
        settings (Optional[AlgorithmSettings]): Tolerance and caps.
        h (Optional[int]): Buses to increment per iteration; the hierarchy default when omitted.
        options (Optional[RelaxationOptions]): Objective and constraint forms.
        solver_settings (Optional[SolverSettings]): SDP solver settings.
        external (Optional[ExternalSolverConfig]): External solver binary, if any.

    Returns:
        GlobalSolution on convergence, BoundOnly otherwise.

    Raises:
        InfeasibleRelaxation: If a relaxation is infeasible.
        AlgorithmError: If a solve fails, with the iteration number.
    """
    settings = settings or AlgorithmSettings()
    options = options or RelaxationOptions()
    h = h if h is not None else settings.default_h(hierarchy)
    if h < 1:
        raise ValueError(f"Parameter h must be at least 1, got {h}.")

    matrices = build_matrices(case)
    structure = sparsity_structure(case, options)
    state = RelaxationState.initial(case.n)
    best_bound = float("-inf")
    report: Optional[MismatchReport] = None
    started = time.time()

    logger.info(
        f"Starting order escalation on {case.name} ({case.n} buses, {len(structure.cliques)} cliques, "
        f"largest {structure.max_clique_size}) with the {hierarchy} hierarchy and h = {h}."
    )

    for iteration in range(1, settings.max_iterations + 1):
        try:
            result = solve_relaxation(
                case, hierarchy, state.orders, options, solver_settings, structure, matrices, external
            )
        except (SDPError, ExternalSolverError, OrderTooLowError) as e:
            logger.error(f"Iteration {iteration}: relaxation solve failed: {e}")
            raise AlgorithmError(f"Iteration {iteration}: relaxation solve failed: {e}", iteration, e) from e

        solution = result.solution
        if solution.status == "infeasible":
            raise InfeasibleRelaxation(
                f"Iteration {iteration}: the relaxation is infeasible, so the OPF problem is infeasible.", iteration
            )
        if solution.status not in ACCEPTED_STATUSES:
            raise AlgorithmError(f"Iteration {iteration}: solver returned status {solution.status}.", iteration)
        if solution.status == "near_optimal":
            logger.warning(f"Iteration {iteration}: solver stopped near optimal; continuing with its solution.")

        bound = float(solution.objective)
        if bound < best_bound - 1e-7 * (1.0 + abs(best_bound)):
            logger.warning(f"Iteration {iteration}: bound {bound:.8g} fell below the previous {best_bound:.8g}.")
        best_bound = max(best_bound, bound)

        try:
            report = mismatch(case, result.relaxation, solution.y, matrices=matrices)
        except AlgorithmError as e:
            raise AlgorithmError(f"Iteration {iteration}: {e.message}", iteration, e) from e
        state = state.record(_record(state, result, report))
        logger.info(
            f"Iteration {iteration}: orders {list(state.orders)}, bound {bound:.8g}, "
            f"max mismatch {report.max_mismatch:.4g} MVA at bus {report.worst_bus}."
        )

        if report.max_mismatch <= settings.eps_mva:
            try:
                voltages = extract(result.relaxation, solution.y, settings.rank_tol)
            except RankConditionError as e:
                logger.warning(f"Iteration {iteration}: mismatches are within tolerance but {e.message}")
                return BoundOnly(best_bound, "rank_condition", state, report)
            return _global_solution(case, options, matrices, voltages, best_bound, state, report)

        if time.time() - started > settings.wall_time_s:
            logger.warning(f"Wall-time cap of {settings.wall_time_s:.0f}s reached after iteration {iteration}.")
            return BoundOnly(best_bound, "wall_time", state, report)

        escalated = increment_orders(state, report, h, settings.eps_mva)
        if escalated.gamma_max > settings.max_gamma:
            logger.warning(f"Order cap {settings.max_gamma} reached after iteration {iteration}.")
            return BoundOnly(best_bound, "max_gamma", state, report)
        logger.debug(f"Iteration {iteration}: raising orders at buses {list(escalated.changed)}.")
        state = escalated

    logger.warning(f"Iteration cap of {settings.max_iterations} reached.")
    return BoundOnly(best_bound, "max_iterations", state, report)


def _global_solution(
    case: NetworkCase,
    options: RelaxationOptions,
    matrices: HermitianMatrixSet,
    voltages: np.ndarray,
    bound: float,
    state: RelaxationState,
    report: MismatchReport,
) -> GlobalSolution:
    objective = objective_polynomial(case, options.objective, matrices).evaluate(voltages)
    gap = (objective - bound) / max(1.0, abs(objective))
    feasibility = verify_feasibility(case, voltages, matrices)
    if gap < -1e-9:
        logger.warning(f"Objective {objective:.8g} is below the bound {bound:.8g}; V* is slightly infeasible.")
    logger.info(
        f"Global solution after {state.iteration} iterations: objective {objective:.8g}, bound {bound:.8g}, "
        f"gap {gap:.2e}."
    )
    return GlobalSolution(voltages, float(objective), bound, float(gap), feasibility, state, report)
