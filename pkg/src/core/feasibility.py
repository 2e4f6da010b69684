# Standard Library Imports
from dataclasses import dataclass
from typing import List, Literal, NamedTuple, Optional, Tuple

# Third-Party Library Imports
import numpy as np

# Local Application Imports
from src.common.constants import VOLTAGE_TOLERANCE_PU
from src.network import HermitianMatrixSet, NetworkCase, aggregate_bus_generation, build_matrices, injection_oracle

Unit = Literal["MW", "MVAr", "pu", "MVA", "rad"]


class Violation(NamedTuple):
    """Signed violation of one constraint; positive means violated, negative is slack."""
    name: str
    unit: Unit
    value: float


@dataclass(frozen=True)
class FeasibilityReport:
    violations: Tuple[Violation, ...]

    def max_violation(self, unit: Optional[Unit] = None) -> float:
        """Largest signed violation, optionally restricted to one unit; -inf when there is none."""
        values = [v.value for v in self.violations if unit is None or v.unit == unit]
        return max(values, default=float("-inf"))

    def worst(self) -> Optional[Violation]:
        if not self.violations:
            return None
        return max(self.violations, key=lambda v: v.value)

    def is_feasible(self, eps_mva: float, v_tol: float = VOLTAGE_TOLERANCE_PU) -> bool:
        """Power constraints within `eps_mva`, voltage magnitudes and the reference angle within `v_tol`."""
        power = max(self.max_violation("MW"), self.max_violation("MVAr"), self.max_violation("MVA"))
        voltage = max(self.max_violation("pu"), self.max_violation("rad"))
        return power <= eps_mva and voltage <= v_tol

    def summary(self) -> dict:
        return {unit: self.max_violation(unit) for unit in ("MW", "MVAr", "pu", "MVA", "rad")}


def verify_feasibility(
    case: NetworkCase, voltages: np.ndarray, matrices: Optional[HermitianMatrixSet] = None
) -> FeasibilityReport:
    """
    Evaluate every OPF constraint at a voltage profile.

    Generation limits are checked per bus on the aggregated limits, so a bus without generators must have
    zero generation, which is its power balance. Powers are reported in MW, MVAr and MVA, voltage
    magnitudes in per unit and the reference angle in radians.

    Args:
        case (NetworkCase): Network data.
        voltages (np.ndarray): Complex bus voltages in per unit.
        matrices (Optional[HermitianMatrixSet]): Precomputed network matrices.

    Returns:
        FeasibilityReport: One entry per constraint side.
    """
    matrices = matrices or build_matrices(case)
    v = np.asarray(voltages, dtype=complex)
    if v.shape != (case.n,):
        raise ValueError(f"Expected {case.n} voltages, got shape {v.shape}.")
    base = case.base_mva
    generation = aggregate_bus_generation(case)
    injections = injection_oracle(matrices.admittance, v)
    p_gen = injections.real + case.p_load
    q_gen = injections.imag + case.q_load
    magnitude = np.abs(v)

    violations: List[Violation] = []
    for k in range(case.n):
        violations.append(Violation(f"P[bus {k}]_min", "MW", float(generation.p_min[k] - p_gen[k]) * base))
        violations.append(Violation(f"P[bus {k}]_max", "MW", float(p_gen[k] - generation.p_max[k]) * base))
        violations.append(Violation(f"Q[bus {k}]_min", "MVAr", float(generation.q_min[k] - q_gen[k]) * base))
        violations.append(Violation(f"Q[bus {k}]_max", "MVAr", float(q_gen[k] - generation.q_max[k]) * base))
        violations.append(Violation(f"V[bus {k}]_min", "pu", float(case.buses[k].v_min - magnitude[k])))
        violations.append(Violation(f"V[bus {k}]_max", "pu", float(magnitude[k] - case.buses[k].v_max)))

    for flow in matrices.flows:
        if flow.s_max <= 0:
            continue
        p = float(np.real(np.conj(v) @ flow.p_matrix @ v))
        q = float(np.real(np.conj(v) @ flow.q_matrix @ v))
        violations.append(
            Violation(f"S[line {flow.line} at bus {flow.bus}]", "MVA", (float(np.hypot(p, q)) - flow.s_max) * base)
        )

    violations.append(Violation("reference_angle", "rad", float(abs(np.angle(v[case.ref_bus])))))
    return FeasibilityReport(tuple(violations))
