# Standard Library Imports
from dataclasses import dataclass
from typing import List, Optional

# Third-Party Library Imports
import numpy as np
from scipy.optimize import minimize

# Local Application Imports
from src.common import ObjectiveMode, logger
from src.network import (
    HermitianMatrixSet,
    NetworkCase,
    aggregate_bus_generation,
    build_matrices,
    injection_oracle,
    objective_polynomial,
)
from src.polynomial import VariableLayout

from .feasibility import FeasibilityReport, verify_feasibility


@dataclass(frozen=True)
class LocalSolution:
    """Best locally optimal point found over all starts."""

    voltages: np.ndarray
    objective: float
    feasibility: FeasibilityReport
    starts: int
    successes: int


class _Constraints:
    """Vectorized OPF constraints over the real coordinates xi."""

    def __init__(self, case: NetworkCase, matrices: HermitianMatrixSet, layout: VariableLayout):
        self.case = case
        self.matrices = matrices
        self.layout = layout
        generation = aggregate_bus_generation(case)
        lower = np.concatenate([generation.p_min - case.p_load, generation.q_min - case.q_load, case.v_min**2])
        upper = np.concatenate([generation.p_max - case.p_load, generation.q_max - case.q_load, case.v_max**2])
        self.equal = np.isclose(lower, upper, rtol=0.0, atol=1e-12)
        self.lower = lower
        self.upper = upper
        self.flows = [flow for flow in matrices.flows if flow.s_max > 0]

    def bus_values(self, xi: np.ndarray) -> np.ndarray:
        v = self.layout.voltages(xi)
        s = injection_oracle(self.matrices.admittance, v)
        return np.concatenate([s.real, s.imag, np.abs(v) ** 2])

    def equalities(self, xi: np.ndarray) -> np.ndarray:
        return (self.bus_values(xi) - self.lower)[self.equal]

    def inequalities(self, xi: np.ndarray) -> np.ndarray:
        values = self.bus_values(xi)
        keep = ~self.equal
        parts = [(values - self.lower)[keep], (self.upper - values)[keep]]
        if self.flows:
            v = self.layout.voltages(xi)
            squared = [
                flow.s_max**2
                - float(np.real(np.conj(v) @ flow.p_matrix @ v)) ** 2
                - float(np.real(np.conj(v) @ flow.q_matrix @ v)) ** 2
                for flow in self.flows
            ]
            parts.append(np.asarray(squared))
        return np.concatenate(parts)


def _starting_points(case: NetworkCase, layout: VariableLayout, starts: int, seed: int) -> List[np.ndarray]:
    flat = np.clip(np.ones(case.n), case.v_min, case.v_max).astype(complex)
    points = [layout.xi(flat)]
    rng = np.random.default_rng(seed)
    for _ in range(starts - 1):
        magnitude = rng.uniform(case.v_min, case.v_max)
        angle = rng.uniform(-np.pi / 6, np.pi / 6, size=case.n)
        angle[case.ref_bus] = 0.0
        points.append(layout.xi(magnitude * np.exp(1j * angle)))
    return points


def solve_local(
    case: NetworkCase,
    objective: ObjectiveMode = "cost",
    starts: int = 10,
    seed: int = 0,
    eps_mva: float = 1.0,
    max_iter: int = 500,
) -> Optional[LocalSolution]:
    """
    Multi-start local solution of the OPF problem in rectangular voltage coordinates.

    Each start runs SLSQP with the reference imaginary part fixed at zero. Points feasible within `eps_mva`
    are kept and the one with the lowest objective is returned. It gives no optimality certificate and serves
    as an independent check of the relaxation results.

    Args:
        case (NetworkCase): Network data.
        objective (ObjectiveMode): "cost" or "loss".
        starts (int): Number of starting points; the first is a flat start.
        seed (int): Seed for the random starts.
        eps_mva (float): Power feasibility tolerance in MVA.
        max_iter (int): SLSQP iteration limit per start.

    Returns:
        Optional[LocalSolution]: The best feasible point, or None if no start reached feasibility.
    """
    if starts < 1:
        raise ValueError(f"Number of starts must be positive, got {starts}.")
    matrices = build_matrices(case)
    layout = VariableLayout(case.n, case.ref_bus)
    constraints = _Constraints(case, matrices, layout)
    poly = objective_polynomial(case, objective, matrices)

    scipy_constraints = [{"type": "ineq", "fun": constraints.inequalities}]
    if constraints.equal.any():
        scipy_constraints.append({"type": "eq", "fun": constraints.equalities})

    best: Optional[LocalSolution] = None
    successes = 0
    for number, x0 in enumerate(_starting_points(case, layout, starts, seed)):
        result = minimize(
            lambda xi: poly.evaluate(layout.voltages(xi)),
            x0,
            method="SLSQP",
            constraints=scipy_constraints,
            options={"maxiter": max_iter, "ftol": 1e-12},
        )
        voltages = layout.voltages(result.x)
        report = verify_feasibility(case, voltages, matrices)
        if not report.is_feasible(eps_mva):
            logger.debug(f"Local start {number}: infeasible ({result.message}).")
            continue
        successes += 1
        value = poly.evaluate(voltages)
        logger.debug(f"Local start {number}: objective {value:.8g}.")
        if best is None or value < best.objective:
            best = LocalSolution(voltages, float(value), report, starts, successes)

    if best is None:
        logger.warning(f"No local start reached a feasible point on {case.name}.")
        return None
    return LocalSolution(best.voltages, best.objective, best.feasibility, starts, successes)
