"""
blocks.py

Symbolic relaxation data: blocks whose entries are linear forms over moment variables, scalar linear
constraints, and the assembled relaxation with its conversion to an SDPProblem.
"""

# Standard Library Imports
from dataclasses import dataclass, field
from functools import singledispatch
from typing import Callable, Dict, List, Literal, Mapping, NamedTuple, Optional, Tuple, Union

# Third-Party Library Imports
import numpy as np
import scipy.sparse as sp

# Local Application Imports
from src.common import ComplexForm, Hierarchy, LinearForm
from src.common.constants import CONSTANT_TERM
from src.polynomial import MomentIndex, PolynomialError, render_complex
from src.sdp import SDPBlock, SDPProblem
from src.sparsity import ChordalStructure

BlockKind = Literal["moment", "localizing", "schur_cost", "schur_flow"]
Form = Union[LinearForm, ComplexForm]


class OrderTooLowError(PolynomialError):
    """Raised when a constraint of degree 2*eta is requested at an order below eta."""


def add_forms(*terms: Tuple[float, Mapping[int, Union[float, complex]]]) -> Dict[int, Union[float, complex]]:
    """Sum of scaled linear forms, zero coefficients dropped."""
    out: Dict[int, Union[float, complex]] = {}
    for scale, form in terms:
        for key, coef in form.items():
            out[key] = out.get(key, 0.0) + scale * coef
    return {k: v for k, v in out.items() if v != 0}


def evaluate_form(form: Mapping[int, Union[float, complex]], y: np.ndarray) -> Union[float, complex]:
    total: Union[float, complex] = 0.0
    for key, coef in form.items():
        total += coef * (1.0 if key == CONSTANT_TERM else y[key])
    return total


def render_form(form: Mapping[int, Union[float, complex]], idx: MomentIndex) -> str:
    """Readable rendering such as `-0.81 y_000 + y_020 + y_002`; complex forms are grouped per label."""
    pieces: List[Tuple[str, complex]] = []
    consumed = set()
    for key in sorted(form, key=lambda k: (k != CONSTANT_TERM, k)):
        if key in consumed:
            continue
        coef = form[key]
        if key == CONSTANT_TERM:
            pieces.append(("1", complex(coef)))
            continue
        label, part = idx.lookup(key)
        if part in ("real", "aux"):
            pieces.append((idx.describe(key), complex(coef)))
            continue
        re_id, im_id = idx.complex_ids(label)  # type: ignore[arg-type]
        re_coef = complex(form.get(re_id, 0.0))
        im_coef = complex(form.get(im_id, 0.0)) if im_id is not None else 0j
        consumed.update((re_id, im_id))
        alpha, beta = label  # type: ignore[misc]
        if im_id is None or im_coef == 1j * re_coef:
            pieces.append((render_complex(label), re_coef))  # type: ignore[arg-type]
        elif im_coef == -1j * re_coef:
            pieces.append((render_complex((beta, alpha)), re_coef))
        else:
            if re_coef != 0:
                pieces.append((idx.describe(re_id), re_coef))
            pieces.append((idx.describe(im_id), im_coef))
    if not pieces:
        return "0"
    text = []
    for i, (name, coef) in enumerate(pieces):
        value: Union[float, complex] = coef.real if coef.imag == 0 else coef
        sign = "-" if isinstance(value, float) and value < 0 else "+"
        magnitude = abs(value) if isinstance(value, float) else value
        head = ("-" if sign == "-" else "") if i == 0 else f" {sign} "
        if name == "1":
            text.append(f"{head}{magnitude:g}")
        elif magnitude == 1:
            text.append(f"{head}{name}")
        else:
            text.append(f"{head}{magnitude:g} {name}")
    return "".join(text)


@dataclass(frozen=True, eq=False)
class SymbolicBlock:
    """
    A PSD constraint with symbolic entries.

    Only the upper triangle is stored. Lower entries are the same form (real blocks) or the conjugate form
    (Hermitian blocks).

    Attributes:
        name (str): Label, also used for the exported SDP block.
        kind (BlockKind): Block family.
        dim (int): Dimension (complex dimension for Hermitian blocks).
        entries (Dict[Tuple[int, int], Form]): Forms of the upper triangle, keyed (i, j) with i <= j.
        hermitian (bool): True for complex Hermitian blocks.
        clique (Optional[int]): Clique the block belongs to.
    """

    name: str
    kind: BlockKind
    dim: int
    entries: Dict[Tuple[int, int], Form]
    hermitian: bool = False
    clique: Optional[int] = None

    def entry(self, i: int, j: int) -> Form:
        if i <= j:
            return self.entries.get((i, j), {})
        mirror = self.entries.get((j, i), {})
        if self.hermitian:
            return {k: np.conj(v) for k, v in mirror.items()}
        return mirror

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        """Numeric matrix at the point y (complex for Hermitian blocks)."""
        out = np.zeros((self.dim, self.dim), dtype=complex if self.hermitian else float)
        for (i, j), form in self.entries.items():
            value = evaluate_form(form, y)
            out[i, j] = value
            out[j, i] = np.conj(value) if self.hermitian else value
        return out

    def render(self, idx: MomentIndex) -> List[List[str]]:
        """Entry renderings for pattern dumps."""
        return [[render_form(self.entry(i, j), idx) for j in range(self.dim)] for i in range(self.dim)]


class LinearConstraint(NamedTuple):
    """form >= 0 or form == 0, with the constant under CONSTANT_TERM."""
    form: LinearForm
    sense: Literal[">=", "=="]
    name: str


class FirstOrderBlock(NamedTuple):
    """
    Degree-one rows of a clique's moment block.

    Attributes:
        clique (int): Clique id.
        block_index (int): Position of the moment block in `Relaxation.blocks`.
        rows (Tuple[int, ...]): Rows of the degree-one monomials.
        variables (Tuple[int, ...]): Real variable position (real hierarchy) or bus (complex) of each row.
    """
    clique: int
    block_index: int
    rows: Tuple[int, ...]
    variables: Tuple[int, ...]


@singledispatch
def hermitian_to_real(block):
    """
    Real symmetric image [[Re H, -Im H], [Im H, Re H]] of a Hermitian block.

    The image is PSD exactly when H is, and every eigenvalue of H appears twice.
    """
    raise TypeError(f"Cannot convert {type(block).__name__} to a real block.")


@hermitian_to_real.register
def _(block: np.ndarray) -> np.ndarray:
    h = np.asarray(block)
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


@hermitian_to_real.register
def _(block: SymbolicBlock) -> SymbolicBlock:
    if not block.hermitian:
        return block
    d = block.dim
    entries: Dict[Tuple[int, int], Form] = {}

    def parts(i: int, j: int) -> Tuple[LinearForm, LinearForm]:
        form = block.entry(i, j)
        re = {k: float(np.real(v)) for k, v in form.items() if np.real(v) != 0}
        im = {k: float(np.imag(v)) for k, v in form.items() if np.imag(v) != 0}
        return re, im

    for p in range(2 * d):
        for q in range(p, 2 * d):
            i, j = p % d, q % d
            re, im = parts(i, j)
            if (p < d) == (q < d):
                form = re
            elif p < d:
                form = {k: -v for k, v in im.items()}
            else:
                form = im
            if form:
                entries[(p, q)] = form
    return SymbolicBlock(block.name, block.kind, 2 * d, entries, hermitian=False, clique=block.clique)


class Census(NamedTuple):
    """Size summary of a relaxation (real-representation dimensions)."""
    num_variables: int
    num_blocks: Dict[str, int]
    max_block_dim: int
    num_linear: int
    num_equalities: int


@dataclass(eq=False)
class Relaxation:
    """
    An assembled moment relaxation.

    Attributes:
        kind (Hierarchy): Hierarchy it was built for.
        idx (MomentIndex): Variable index.
        orders (Tuple[int, ...]): Per-bus orders.
        structure (ChordalStructure): Cliques the blocks follow.
        blocks (List[SymbolicBlock]): PSD blocks.
        constraints (List[LinearConstraint]): Scalar constraints, normalization included.
        objective (LinearForm): Objective over variable ids; CONSTANT_TERM holds a constant.
        first_order (List[FirstOrderBlock]): Degree-one parts of the moment blocks.
        injection_forms (List[Tuple[LinearForm, LinearForm]]): Lifted net active and reactive injection
            per bus, loads excluded.
        aux (Dict[int, Callable[[np.ndarray], float]]): Tight value of each auxiliary variable at a voltage.
        lower (Dict[int, float]) / upper (Dict[int, float]): Variable bounds.
        ref_bus (int): Angle reference.
    """

    kind: Hierarchy
    idx: MomentIndex
    orders: Tuple[int, ...]
    structure: ChordalStructure
    ref_bus: int
    blocks: List[SymbolicBlock] = field(default_factory=list)
    constraints: List[LinearConstraint] = field(default_factory=list)
    objective: LinearForm = field(default_factory=dict)
    first_order: List[FirstOrderBlock] = field(default_factory=list)
    injection_forms: List[Tuple[LinearForm, LinearForm]] = field(default_factory=list)
    aux: Dict[int, Callable[[np.ndarray], float]] = field(default_factory=dict)
    lower: Dict[int, float] = field(default_factory=dict)
    upper: Dict[int, float] = field(default_factory=dict)

    @property
    def num_vars(self) -> int:
        return len(self.idx)

    @property
    def gamma_max(self) -> int:
        return max(self.orders)

    def moment_blocks(self) -> List[SymbolicBlock]:
        return [block for block in self.blocks if block.kind == "moment"]

    def lift_point(self, voltages: np.ndarray) -> np.ndarray:
        """
        Moment vector of a voltage profile with auxiliary variables at their tight values.

        The voltages are first rotated so the reference bus has angle zero.
        """
        v = np.asarray(voltages, dtype=complex)
        ref = v[self.ref_bus]
        if abs(ref) > 0:
            v = v * np.exp(-1j * np.angle(ref))
        y = np.zeros(self.num_vars)
        if self.kind == "real":
            xi = np.concatenate([v.real, np.delete(v.imag, self.ref_bus)])
        for var_id in range(self.num_vars):
            label, part = self.idx.lookup(var_id)
            if part == "aux":
                y[var_id] = self.aux[var_id](v)
            elif part == "real":
                y[var_id] = float(np.prod(xi ** np.asarray(label)))
            else:
                alpha, beta = label  # type: ignore[misc]
                value = np.prod(v ** np.asarray(alpha)) * np.prod(np.conj(v) ** np.asarray(beta))
                y[var_id] = value.real if part == "re" else value.imag
        return y

    def census(self) -> Census:
        counts: Dict[str, int] = {}
        max_dim = 0
        for block in self.blocks:
            counts[block.kind] = counts.get(block.kind, 0) + 1
            max_dim = max(max_dim, 2 * block.dim if block.hermitian else block.dim)
        num_eq = sum(1 for c in self.constraints if c.sense == "==")
        return Census(self.num_vars, counts, max_dim, len(self.constraints) - num_eq, num_eq)

    def to_sdp_problem(self) -> SDPProblem:
        """Real SDPProblem over the moment variables; Hermitian blocks are embedded as real blocks."""
        m = self.num_vars
        sdp_blocks = [_to_sdp_block(hermitian_to_real(block), m) for block in self.blocks]

        c = np.zeros(m)
        for key, coef in self.objective.items():
            if key != CONSTANT_TERM:
                c[key] += coef
        offset = float(self.objective.get(CONSTANT_TERM, 0.0))

        lp = [con for con in self.constraints if con.sense == ">="]
        eq = [con for con in self.constraints if con.sense == "=="]
        lp_matrix, lp_offset = _form_rows(lp, m)
        eq_matrix, eq_constant = _form_rows(eq, m)

        lower = np.full(m, -np.inf)
        upper = np.full(m, np.inf)
        for key, value in self.lower.items():
            lower[key] = value
        for key, value in self.upper.items():
            upper[key] = value
        return SDPProblem.build(
            c=c,
            blocks=sdp_blocks,
            lp_matrix=lp_matrix,
            lp_offset=lp_offset,
            eq_matrix=eq_matrix,
            eq_rhs=-eq_constant,
            lower=lower,
            upper=upper,
            offset=offset,
            names=[self.idx.describe(i) for i in range(m)],
        )


def _to_sdp_block(block: SymbolicBlock, num_vars: int) -> SDPBlock:
    d = block.dim
    f0 = np.zeros((d, d))
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    for (i, j), form in sorted(block.entries.items()):
        for key, coef in form.items():
            value = float(np.real(coef))
            if value == 0.0:
                continue
            if key == CONSTANT_TERM:
                f0[i, j] = f0[j, i] = value
                continue
            rows.append(i * d + j)
            cols.append(key)
            vals.append(value)
            if i != j:
                rows.append(j * d + i)
                cols.append(key)
                vals.append(value)
    coefficients = sp.csc_matrix((vals, (rows, cols)), shape=(d * d, num_vars))
    coefficients.sum_duplicates()
    coefficients.sort_indices()
    return SDPBlock(name=block.name, f0=f0, coefficients=coefficients)


def _form_rows(constraints: List[LinearConstraint], num_vars: int) -> Tuple[sp.csr_matrix, np.ndarray]:
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    constants = np.zeros(len(constraints))
    for r, con in enumerate(constraints):
        for key, coef in con.form.items():
            if key == CONSTANT_TERM:
                constants[r] = coef
            else:
                rows.append(r)
                cols.append(key)
                vals.append(coef)
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(len(constraints), num_vars))
    matrix.sum_duplicates()
    matrix.sort_indices()
    return matrix, constants


def schur_flow_block(p_form: LinearForm, q_form: LinearForm, s_max: float, name: str, clique: int) -> SymbolicBlock:
    """
    [[S^2, P, Q], [P, 1, 0], [Q, 0, 1]] >= 0, which holds exactly when P^2 + Q^2 <= S^2.

    Args:
        p_form (LinearForm): Lifted active flow.
        q_form (LinearForm): Lifted reactive flow.
        s_max (float): Apparent power limit, positive.
        name (str): Block label.
        clique (int): Clique the flow is assigned to.

    Raises:
        ValueError: If `s_max` is not positive.
    """
    if s_max <= 0:
        raise ValueError(f"Flow limit of {name} must be positive, got {s_max}.")
    entries: Dict[Tuple[int, int], Form] = {
        (0, 0): {CONSTANT_TERM: s_max * s_max},
        (0, 1): dict(p_form),
        (0, 2): dict(q_form),
        (1, 1): {CONSTANT_TERM: 1.0},
        (2, 2): {CONSTANT_TERM: 1.0},
    }
    return SymbolicBlock(name, "schur_flow", 3, entries, clique=clique)


def schur_cost_block(
    t_id: int, generation: LinearForm, c2: float, c1: float, c0: float, name: str, clique: Optional[int]
) -> SymbolicBlock:
    """
    Epigraph block [[t - c1 P - c0, sqrt(c2) P], [sqrt(c2) P, 1]] >= 0, i.e. t >= c2 P^2 + c1 P + c0.

    Raises:
        ValueError: If `c2` is negative.
    """
    if c2 < 0:
        raise ValueError(f"Quadratic cost coefficient of {name} is negative: {c2}.")
    entries: Dict[Tuple[int, int], Form] = {
        (0, 0): add_forms((1.0, {t_id: 1.0}), (-c1, generation), (1.0, {CONSTANT_TERM: -c0})),
        (0, 1): add_forms((float(np.sqrt(c2)), generation)),
        (1, 1): {CONSTANT_TERM: 1.0},
    }
    return SymbolicBlock(name, "schur_cost", 2, entries, clique=clique)
