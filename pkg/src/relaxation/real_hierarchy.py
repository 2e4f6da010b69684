# Standard Library Imports
from typing import Dict, List, Optional, Sequence, Tuple

# Third-Party Library Imports
import numpy as np

# Local Application Imports
from src.common import LinearForm, RealMonomial, logger
from src.network import HermitianMatrixSet, NetworkCase
from src.polynomial import (
    MomentIndex,
    PolyR,
    VariableLayout,
    add_exponents,
    hermitian_form_real,
    lift_real,
    monomial_basis,
)
from src.sparsity import ChordalStructure

from .blocks import Form, Relaxation, SymbolicBlock
from .builder import RelaxationBuilder
from .options import RelaxationOptions


def moment_matrix(
    basis: Sequence[RealMonomial], idx: MomentIndex, name: str = "moment", clique: Optional[int] = None
) -> SymbolicBlock:
    """
    Symbolic moment matrix L_y{x x^T}: entry (i, j) is y_{alpha_i + alpha_j}.

    Args:
        basis (Sequence[RealMonomial]): Monomial basis x, nonempty.
        idx (MomentIndex): Real index; new monomials are registered.
        name (str): Block label.
        clique (Optional[int]): Owning clique.

    Returns:
        SymbolicBlock: Symmetric block of dimension len(basis).
    """
    if not basis:
        raise ValueError("Moment matrix basis must not be empty.")
    entries: Dict[Tuple[int, int], Form] = {}
    for i, a in enumerate(basis):
        for j in range(i, len(basis)):
            entries[(i, j)] = {idx.real_id(add_exponents(a, basis[j])): 1.0}
    return SymbolicBlock(name, "moment", len(basis), entries, clique=clique)


def localizing_matrix(
    g: PolyR, basis: Sequence[RealMonomial], idx: MomentIndex, name: str = "localizing", clique: Optional[int] = None
) -> SymbolicBlock:
    """
    Symbolic localizing matrix L_y{g x x^T}: entry (i, j) is sum_delta g_delta y_{delta + alpha_i + alpha_j}.

    Raises:
        DegreeLimitError: If an entry exceeds the degree the index allows.
    """
    if not basis:
        raise ValueError("Localizing matrix basis must not be empty.")
    entries: Dict[Tuple[int, int], Form] = {}
    for i, a in enumerate(basis):
        for j in range(i, len(basis)):
            shift = add_exponents(a, basis[j])
            form: LinearForm = {}
            for delta, coef in g.items():
                var_id = idx.real_id(add_exponents(delta, shift))
                form[var_id] = form.get(var_id, 0.0) + coef
            form = {k: v for k, v in form.items() if v != 0}
            if form:
                entries[(i, j)] = form
    return SymbolicBlock(name, "localizing", len(basis), entries, clique=clique)


class RealRelaxationBuilder(RelaxationBuilder):
    """Moment relaxation over xi = (V_d, V_q) with the reference V_q eliminated."""

    kind = "real"

    def __init__(
        self,
        case: NetworkCase,
        structure: ChordalStructure,
        orders: Sequence[int],
        options: Optional[RelaxationOptions] = None,
        matrices: Optional[HermitianMatrixSet] = None,
    ):
        self.layout = VariableLayout(case.n, case.ref_bus)
        super().__init__(case, structure, orders, options, matrices)
        if self.options.sphere:
            logger.warning("The sphere constraint applies to the complex hierarchy only; ignoring it.")

    def _new_index(self, max_degree: int) -> MomentIndex:
        return MomentIndex("real", self.layout.num_real_vars, max_degree)

    def _basis(self, buses: Sequence[int], order: int) -> List[RealMonomial]:
        return monomial_basis(self.layout.bus_variables(buses), order, self.layout.num_real_vars)

    def _first_order(self, basis: List[RealMonomial]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        rows = tuple(i for i, a in enumerate(basis) if sum(a) == 1)
        return rows, tuple(basis[i].index(1) for i in rows)

    def _quadratic(self, matrix: np.ndarray) -> PolyR:
        return hermitian_form_real(matrix, self.layout)

    def _constant(self, value: float) -> PolyR:
        return PolyR.constant(self.layout.num_real_vars, value)

    def _lift(self, poly: PolyR) -> LinearForm:  # type: ignore[override]
        return lift_real(poly, self.idx)

    def _moment_block(self, basis: List[RealMonomial], name: str, clique: int) -> SymbolicBlock:
        return moment_matrix(basis, self.idx, name, clique)

    def _localizing_block(self, poly: PolyR, basis: List[RealMonomial], name: str, clique: int) -> SymbolicBlock:  # type: ignore[override]
        return localizing_matrix(poly, basis, self.idx, name, clique)

    def _bound(self, var_id: int, v_max: np.ndarray) -> Optional[float]:
        label, part = self.idx.lookup(var_id)
        if part != "real":
            return None
        bound = 1.0
        for position, power in enumerate(label):  # type: ignore[arg-type]
            if power:
                bound *= float(v_max[self.layout.bus_of(position)]) ** power
        return bound


def assemble_real(
    case: NetworkCase,
    structure: ChordalStructure,
    orders: Sequence[int],
    options: Optional[RelaxationOptions] = None,
    matrices: Optional[HermitianMatrixSet] = None,
) -> Relaxation:
    """
    Assemble the sparse real moment relaxation.

    Args:
        case (NetworkCase): Network data.
        structure (ChordalStructure): Cliques of the sparsity graph.
        orders (Sequence[int]): Relaxation order of every bus, each in [1, 3].
        options (Optional[RelaxationOptions]): Objective and constraint forms.
        matrices (Optional[HermitianMatrixSet]): Precomputed network matrices.

    Returns:
        Relaxation: Blocks, constraints, objective and bounds over the real moment index.

    Raises:
        OrderTooLowError: If a requested direct quartic form needs a higher order.
    """
    return RealRelaxationBuilder(case, structure, orders, options, matrices).build()
