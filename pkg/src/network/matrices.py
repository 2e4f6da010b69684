# Standard Library Imports
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

# Third-Party Library Imports
import numpy as np

# Local Application Imports
from src.common import ObjectiveMode
from src.polynomial import PolyC, PolyR, VariableLayout, hermitian_form_complex, hermitian_form_real

from .network_case import NetworkCase, aggregate_bus_generation


class FlowMatrices(NamedTuple):
    """
    Flow data for one line terminal: S = V^H F V is the complex power leaving `bus` towards `other`.

    Attributes:
        line (int): Position of the line in `case.lines`.
        bus (int): Terminal bus.
        other (int): Opposite bus.
        s_max (float): Apparent power limit in per unit (0 for none).
        flow (np.ndarray): F (not Hermitian).
        p_matrix (np.ndarray): (F + F^H)/2, so P = V^H p_matrix V.
        q_matrix (np.ndarray): (F - F^H)/(2j), so Q = V^H q_matrix V.
    """
    line: int
    bus: int
    other: int
    s_max: float
    flow: np.ndarray
    p_matrix: np.ndarray
    q_matrix: np.ndarray


@dataclass(frozen=True)
class HermitianMatrixSet:
    admittance: np.ndarray
    injection_p: Tuple[np.ndarray, ...]
    injection_q: Tuple[np.ndarray, ...]
    flows: Tuple[FlowMatrices, ...]

    @property
    def n(self) -> int:
        return self.admittance.shape[0]


def _branch_admittances(r: float, x: float, b_sh: float, tap: float, shift: float) -> Tuple[complex, ...]:
    y_series = 1.0 / complex(r, x)
    ratio = tap * np.exp(1j * shift)
    y_tt = y_series + 0.5j * b_sh
    y_ff = y_tt / (tap * tap)
    y_ft = -y_series / np.conj(ratio)
    y_tf = -y_series / ratio
    return complex(y_ff), complex(y_ft), complex(y_tf), complex(y_tt)


def _hermitian_parts(flow: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return (flow + flow.conj().T) / 2.0, (flow - flow.conj().T) / 2j


def build_matrices(case: NetworkCase) -> HermitianMatrixSet:
    """
    Assemble Y and the Hermitian matrices of the injection and flow constraints.

    H_k = (Y^H e_k e_k^T + e_k e_k^T Y)/2 and H~_k = (Y^H e_k e_k^T - e_k e_k^T Y)/(2j), so that
    V^H H_k V and V^H H~_k V are the net active and reactive injections at bus k. Flow matrices are
    produced for both terminals of every line.

    Args:
        case (NetworkCase): Validated network.

    Returns:
        HermitianMatrixSet: Immutable matrix set.
    """
    n = case.n
    admittance = np.zeros((n, n), dtype=complex)
    terminal_data = []
    for pos, line in enumerate(case.lines):
        y_ff, y_ft, y_tf, y_tt = _branch_admittances(line.r, line.x, line.b_sh, line.tap, line.shift)
        l, m = line.from_bus, line.to_bus
        admittance[l, l] += y_ff
        admittance[l, m] += y_ft
        admittance[m, l] += y_tf
        admittance[m, m] += y_tt
        terminal_data.append((pos, l, m, line.s_max, y_ff, y_ft))
        terminal_data.append((pos, m, l, line.s_max, y_tt, y_tf))
    for k, bus in enumerate(case.buses):
        admittance[k, k] += complex(bus.g_shunt, bus.b_shunt)

    adjoint = admittance.conj().T
    injection_p = []
    injection_q = []
    for k in range(n):
        left = np.zeros((n, n), dtype=complex)
        left[:, k] = adjoint[:, k]
        right = np.zeros((n, n), dtype=complex)
        right[k, :] = admittance[k, :]
        injection_p.append((left + right) / 2.0)
        injection_q.append((left - right) / 2j)

    flows = []
    for pos, bus, other, s_max, y_self, y_mutual in terminal_data:
        flow = np.zeros((n, n), dtype=complex)
        flow[bus, bus] = np.conj(y_self)
        flow[other, bus] = np.conj(y_mutual)
        p_matrix, q_matrix = _hermitian_parts(flow)
        flows.append(FlowMatrices(pos, bus, other, s_max, flow, p_matrix, q_matrix))

    return HermitianMatrixSet(
        admittance=admittance,
        injection_p=tuple(injection_p),
        injection_q=tuple(injection_q),
        flows=tuple(flows),
    )


def injection_oracle(admittance: np.ndarray, voltages: np.ndarray) -> np.ndarray:
    """Net complex injections S_k = V_k conj((Y V)_k)."""
    v = np.asarray(voltages, dtype=complex)
    return v * np.conj(admittance @ v)


class CostTerm(NamedTuple):
    """c2 (V^H M V + offset)^2 + c1 (V^H M V + offset) + c0 for one generator bus, or the loss sum."""
    bus: Optional[int]
    matrix: np.ndarray
    offset: float
    c2: float
    c1: float
    c0: float


@dataclass(frozen=True)
class ObjectivePolynomial:
    """
    Objective data in terms of Hermitian quadratic forms.

    In cost mode there is one term per generator bus with the aggregated bus cost applied to the
    generation V^H H_k V + P_Dk. In loss mode there is a single linear term sum_k V^H H_k V, i.e. total
    generation minus total load.
    """

    mode: ObjectiveMode
    num_buses: int
    terms: Tuple[CostTerm, ...]

    @property
    def degree(self) -> int:
        if any(term.c2 != 0 for term in self.terms):
            return 4
        return 2 if self.terms else 0

    def evaluate(self, voltages: np.ndarray) -> float:
        v = np.asarray(voltages, dtype=complex)
        total = 0.0
        for term in self.terms:
            value = float(np.real(np.conj(v) @ term.matrix @ v)) + term.offset
            total += term.c2 * value * value + term.c1 * value + term.c0
        return total

    def to_poly_complex(self) -> PolyC:
        """The objective as a Hermitian polynomial in (V, conj(V))."""
        total = PolyC(self.num_buses)
        for term in self.terms:
            generation = hermitian_form_complex(term.matrix) + term.offset
            total = total + generation * generation * term.c2 + generation * term.c1 + term.c0
        return total

    def to_poly_real(self, layout: VariableLayout) -> PolyR:
        """The objective as a real polynomial in xi."""
        total = PolyR(layout.num_real_vars)
        for term in self.terms:
            generation = hermitian_form_real(term.matrix, layout) + term.offset
            total = total + generation * generation * term.c2 + generation * term.c1 + term.c0
        return total


def objective_polynomial(
    case: NetworkCase,
    mode: ObjectiveMode,
    matrices: Optional[HermitianMatrixSet] = None,
) -> ObjectivePolynomial:
    """
    Build the objective of the OPF problem.

    Args:
        case (NetworkCase): Network data.
        mode (ObjectiveMode): "cost" for generation cost, "loss" for active power losses.
        matrices (Optional[HermitianMatrixSet]): Precomputed matrices for the case.

    Returns:
        ObjectivePolynomial: Real-valued on all complex voltage vectors.
    """
    matrices = matrices or build_matrices(case)
    if mode == "loss":
        total = sum(matrices.injection_p[1:], matrices.injection_p[0].copy())
        return ObjectivePolynomial(mode, case.n, (CostTerm(None, total, 0.0, 0.0, 1.0, 0.0),))

    generation = aggregate_bus_generation(case)
    terms = []
    for k in case.generator_buses:
        terms.append(
            CostTerm(
                bus=k,
                matrix=matrices.injection_p[k],
                offset=case.buses[k].p_load,
                c2=float(generation.c2[k]),
                c1=float(generation.c1[k]),
                c0=float(generation.c0[k]),
            )
        )
    return ObjectivePolynomial(mode, case.n, tuple(terms))
