# Standard Library Imports
from typing import Dict, List, Optional, Sequence, Tuple

# Third-Party Library Imports
import numpy as np

# Local Application Imports
from src.common import ComplexForm, ComplexMonomial, LinearForm
from src.common.constants import CONSTANT_TERM
from src.network import HermitianMatrixSet, NetworkCase
from src.polynomial import (
    MomentIndex,
    PolyC,
    add_exponents,
    hermitian_form_complex,
    lift_complex,
    monomial_basis,
    unit_exponent,
)
from src.sparsity import ChordalStructure

from .blocks import Form, LinearConstraint, Relaxation, SymbolicBlock
from .builder import RelaxationBuilder
from .options import RelaxationOptions


def moment_matrix_c(
    basis: Sequence[ComplexMonomial], idx: MomentIndex, name: str = "moment", clique: Optional[int] = None
) -> SymbolicBlock:
    """
    Hermitian moment matrix L̂{z z^H}: entry (i, j) is ŷ_{alpha_i, alpha_j}, the second index conjugated.

    Args:
        basis (Sequence[ComplexMonomial]): Labels (alpha, 0) without conjugated factors.
        idx (MomentIndex): Complex index.
        name (str): Block label.
        clique (Optional[int]): Owning clique.

    Returns:
        SymbolicBlock: Hermitian block of dimension len(basis).
    """
    if not basis:
        raise ValueError("Moment matrix basis must not be empty.")
    entries: Dict[Tuple[int, int], Form] = {}
    for i, (a_i, b_i) in enumerate(basis):
        for j in range(i, len(basis)):
            a_j, b_j = basis[j]
            entries[(i, j)] = idx.complex_form(add_exponents(a_i, b_j), add_exponents(b_i, a_j))
    return SymbolicBlock(name, "moment", len(basis), entries, hermitian=True, clique=clique)


def localizing_matrix_c(
    g: PolyC,
    basis: Sequence[ComplexMonomial],
    idx: MomentIndex,
    name: str = "localizing",
    clique: Optional[int] = None,
) -> SymbolicBlock:
    """Hermitian localizing matrix L̂{g z z^H}: entry (i, j) is sum g_{delta,eps} ŷ_{delta + alpha_i, eps + alpha_j}."""
    if not basis:
        raise ValueError("Localizing matrix basis must not be empty.")
    entries: Dict[Tuple[int, int], Form] = {}
    for i, (a_i, b_i) in enumerate(basis):
        for j in range(i, len(basis)):
            a_j, b_j = basis[j]
            left, right = add_exponents(a_i, b_j), add_exponents(b_i, a_j)
            form: ComplexForm = {}
            for (delta, eps), coef in g.items():
                for var_id, unit in idx.complex_form(add_exponents(delta, left), add_exponents(eps, right)).items():
                    form[var_id] = form.get(var_id, 0j) + coef * unit
            form = {k: v for k, v in form.items() if v != 0}
            if form:
                entries[(i, j)] = form
    return SymbolicBlock(name, "localizing", len(basis), entries, hermitian=True, clique=clique)


class ComplexRelaxationBuilder(RelaxationBuilder):
    """Moment relaxation directly over (V, conj(V)); blocks stay Hermitian until export."""

    kind = "complex"

    def _new_index(self, max_degree: int) -> MomentIndex:
        return MomentIndex("complex", self.case.n, max_degree)

    def _basis(self, buses: Sequence[int], order: int) -> List[ComplexMonomial]:
        zero = (0,) * self.case.n
        return [(alpha, zero) for alpha in monomial_basis(buses, order, self.case.n)]

    def _first_order(self, basis: List[ComplexMonomial]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        rows = tuple(i for i, (alpha, _) in enumerate(basis) if sum(alpha) == 1)
        return rows, tuple(basis[i][0].index(1) for i in rows)

    def _quadratic(self, matrix: np.ndarray) -> PolyC:
        return hermitian_form_complex(matrix)

    def _constant(self, value: float) -> PolyC:
        return PolyC.constant(self.case.n, value)

    def _lift(self, poly: PolyC) -> LinearForm:  # type: ignore[override]
        return lift_complex(poly, self.idx)

    def _moment_block(self, basis: List[ComplexMonomial], name: str, clique: int) -> SymbolicBlock:
        return moment_matrix_c(basis, self.idx, name, clique)

    def _localizing_block(self, poly: PolyC, basis: List[ComplexMonomial], name: str, clique: int) -> SymbolicBlock:  # type: ignore[override]
        return localizing_matrix_c(poly, basis, self.idx, name, clique)

    def _bound(self, var_id: int, v_max: np.ndarray) -> Optional[float]:
        label, part = self.idx.lookup(var_id)
        if part not in ("re", "im"):
            return None
        alpha, beta = label  # type: ignore[misc]
        return float(np.prod(v_max ** (np.asarray(alpha) + np.asarray(beta))))

    def _finish(self) -> None:
        if not self.options.sphere:
            return
        n = self.case.n
        radius = float(np.sum(self.case.v_max**2))
        psi = self.idx.add_auxiliary("psi")
        form: LinearForm = {psi: 1.0, CONSTANT_TERM: -radius}
        for i in range(n):
            unit = unit_exponent(i, n)
            form[self.idx.complex_ids((unit, unit))[0]] = 1.0
        self.relaxation.constraints.append(LinearConstraint(form, "==", "sphere"))
        self.relaxation.constraints.append(LinearConstraint({psi: 1.0}, ">=", "sphere_slack"))
        self.relaxation.aux[psi] = lambda v: radius - float(np.sum(np.abs(v) ** 2))


def assemble_complex(
    case: NetworkCase,
    structure: ChordalStructure,
    orders: Sequence[int],
    options: Optional[RelaxationOptions] = None,
    matrices: Optional[HermitianMatrixSet] = None,
) -> Relaxation:
    """
    Assemble the sparse complex moment relaxation.

    No angle reference enters the relaxation; extracted voltages are rotated afterwards. With
    `options.sphere` the redundant norm equality sum |V_i|^2 + psi = sum V_max_i^2 is added.

    Args:
        case (NetworkCase): Network data.
        structure (ChordalStructure): Cliques of the sparsity graph.
        orders (Sequence[int]): Relaxation order of every bus, each in [1, 3].
        options (Optional[RelaxationOptions]): Objective and constraint forms.
        matrices (Optional[HermitianMatrixSet]): Precomputed network matrices.

    Returns:
        Relaxation: Hermitian blocks over the complex moment index.
    """
    return ComplexRelaxationBuilder(case, structure, orders, options, matrices).build()
