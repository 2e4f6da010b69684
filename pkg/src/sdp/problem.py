# Standard Library Imports
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

# Third-Party Library Imports
import numpy as np
import scipy.sparse as sp

# Local Application Imports
from src.common import SolveStatus


class SDPError(Exception):
    """Base exception for SDP construction and solving."""

    def __init__(self, message: str, original_exception: Union[Exception, None] = None):
        super().__init__(message)
        self.original_exception = original_exception
        self.message = message


class SolverFailure(SDPError):
    """Raised by callers that require an optimal solve and did not get one."""

    def __init__(self, message: str, solution: "SDPSolution"):
        super().__init__(message)
        self.solution = solution


def _as_csr(matrix: Union[np.ndarray, sp.spmatrix], shape: Tuple[int, int]) -> sp.csr_matrix:
    if matrix is None:
        return sp.csr_matrix(shape)
    out = sp.csr_matrix(matrix, dtype=float)
    if out.shape != shape:
        raise SDPError(f"Matrix has shape {out.shape}, expected {shape}.")
    return out


@dataclass(frozen=True, eq=False)
class SDPBlock:
    """
    One PSD constraint F0 + sum_i y_i F_i >= 0.

    Attributes:
        name (str): Label used in logs and exports.
        f0 (np.ndarray): Constant symmetric matrix.
        coefficients (sp.csc_matrix): Shape (d*d, m); column i is F_i flattened row-major, both triangles.
    """

    name: str
    f0: np.ndarray
    coefficients: sp.csc_matrix

    @property
    def dim(self) -> int:
        return self.f0.shape[0]

    def matrix(self, y: np.ndarray) -> np.ndarray:
        d = self.dim
        return self.f0 + np.asarray(self.coefficients @ y).reshape(d, d)

    def variable_matrix(self, i: int) -> np.ndarray:
        d = self.dim
        return np.asarray(self.coefficients[:, i].todense()).reshape(d, d)

    def used_variables(self) -> np.ndarray:
        return np.unique(self.coefficients.nonzero()[1])


@dataclass(frozen=True, eq=False)
class SDPProblem:
    """
    minimize c^T y + offset subject to
        F_b0 + sum_i y_i F_bi >= 0 for every block b,
        lp_matrix y + lp_offset >= 0,
        eq_matrix y = eq_rhs,
        lower <= y <= upper.
    """

    c: np.ndarray
    blocks: Tuple[SDPBlock, ...]
    lp_matrix: sp.csr_matrix
    lp_offset: np.ndarray
    eq_matrix: sp.csr_matrix
    eq_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    offset: float = 0.0
    names: Optional[Tuple[str, ...]] = field(default=None)

    def __post_init__(self) -> None:
        """Check dimensions and symmetry of every block."""
        m = self.num_vars
        if not self.blocks and self.eq_matrix.shape[0] == 0 and self.lp_matrix.shape[0] == 0:
            raise SDPError("An SDP needs at least one block, linear row or equality.")
        if self.lp_matrix.shape[1] != m or self.lp_offset.shape[0] != self.lp_matrix.shape[0]:
            raise SDPError("Linear inequality data has inconsistent dimensions.")
        if self.eq_matrix.shape[1] != m or self.eq_rhs.shape[0] != self.eq_matrix.shape[0]:
            raise SDPError("Equality data has inconsistent dimensions.")
        if self.lower.shape != (m,) or self.upper.shape != (m,):
            raise SDPError("Bounds must have one entry per variable.")
        if np.any(self.lower > self.upper):
            raise SDPError("A lower bound exceeds its upper bound.")
        for block in self.blocks:
            d = block.dim
            if block.f0.shape != (d, d) or block.coefficients.shape != (d * d, m):
                raise SDPError(f"Block {block.name} has inconsistent dimensions.")
            if not np.array_equal(block.f0, block.f0.T):
                raise SDPError(f"Block {block.name} has a non-symmetric constant matrix.")
            transposed = _transpose_rows(d)
            if (block.coefficients - block.coefficients[transposed, :]).count_nonzero():
                raise SDPError(f"Block {block.name} has non-symmetric coefficient matrices.")
        if self.names is not None and len(self.names) != m:
            raise SDPError("Variable names must have one entry per variable.")

    @classmethod
    def build(
        cls,
        c: Sequence[float],
        blocks: Sequence[SDPBlock] = (),
        lp_matrix: Optional[Union[np.ndarray, sp.spmatrix]] = None,
        lp_offset: Optional[Sequence[float]] = None,
        eq_matrix: Optional[Union[np.ndarray, sp.spmatrix]] = None,
        eq_rhs: Optional[Sequence[float]] = None,
        lower: Optional[Sequence[float]] = None,
        upper: Optional[Sequence[float]] = None,
        offset: float = 0.0,
        names: Optional[Sequence[str]] = None,
    ) -> "SDPProblem":
        """Convenience constructor filling empty constraint families."""
        c_arr = np.asarray(c, dtype=float)
        m = c_arr.shape[0]
        lp_off = np.asarray(lp_offset if lp_offset is not None else [], dtype=float)
        eq_b = np.asarray(eq_rhs if eq_rhs is not None else [], dtype=float)
        return cls(
            c=c_arr,
            blocks=tuple(blocks),
            lp_matrix=_as_csr(lp_matrix, (lp_off.shape[0], m)),
            lp_offset=lp_off,
            eq_matrix=_as_csr(eq_matrix, (eq_b.shape[0], m)),
            eq_rhs=eq_b,
            lower=np.asarray(lower, dtype=float) if lower is not None else np.full(m, -np.inf),
            upper=np.asarray(upper, dtype=float) if upper is not None else np.full(m, np.inf),
            offset=float(offset),
            names=tuple(names) if names is not None else None,
        )

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    def objective(self, y: np.ndarray) -> float:
        return float(self.c @ y) + self.offset


def make_block(name: str, f0: np.ndarray, matrices: Sequence[Tuple[int, np.ndarray]], num_vars: int) -> SDPBlock:
    """
    Build a block from dense symmetric matrices.

    Args:
        name (str): Block label.
        f0 (np.ndarray): Constant matrix.
        matrices (Sequence[Tuple[int, np.ndarray]]): (variable index, F_i) pairs; omitted indices are zero.
        num_vars (int): Number of variables m.

    Returns:
        SDPBlock: The block.
    """
    f0 = np.asarray(f0, dtype=float)
    d = f0.shape[0]
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    for var, mat in matrices:
        flat = np.asarray(mat, dtype=float).reshape(-1)
        nz = np.flatnonzero(flat)
        rows.extend(nz.tolist())
        cols.extend([var] * len(nz))
        vals.extend(flat[nz].tolist())
    coefficients = sp.csc_matrix((vals, (rows, cols)), shape=(d * d, num_vars))
    coefficients.sum_duplicates()
    return SDPBlock(name=name, f0=f0, coefficients=coefficients)


def _transpose_rows(d: int) -> np.ndarray:
    """Row permutation of a row-major vec that transposes the matrix."""
    return np.arange(d * d).reshape(d, d).T.reshape(-1)


class DualVariables(NamedTuple):
    """
    Dual multipliers of an SDPProblem, in the convention c + G^T z + A^T nu = 0 with G the negated
    constraint maps.

    Attributes:
        blocks (Tuple[np.ndarray, ...]): Z_b >= 0 per block.
        lp (np.ndarray): Multipliers of the linear inequalities.
        eq (np.ndarray): Multipliers nu of the equalities.
        lower (np.ndarray): Multipliers of lower bounds (0 where the bound is infinite).
        upper (np.ndarray): Multipliers of upper bounds.
    """
    blocks: Tuple[np.ndarray, ...]
    lp: np.ndarray
    eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


class KKTResiduals(NamedTuple):
    primal: float
    dual: float
    gap: float


@dataclass(frozen=True, eq=False)
class SDPSolution:
    """
    Result of an SDP solve.

    Attributes:
        status (SolveStatus): Termination status.
        y (np.ndarray): Variable values (NaN when no point is available).
        objective (float): Primal objective including the offset.
        dual_objective (float): Dual objective, NaN when duals are unavailable.
        min_eigenvalues (Tuple[float, ...]): Smallest eigenvalue of every block at y.
        residuals (KKTResiduals): Recomputed from the problem and the returned point.
        duals (Optional[DualVariables]): Dual multipliers.
        iterations (int): Interior-point iterations (0 for imported solutions).
        solve_time (float): Wall time in seconds.
        certificate (Optional[np.ndarray]): Normalized ray proving infeasibility or unboundedness.
    """

    status: SolveStatus
    y: np.ndarray
    objective: float
    dual_objective: float
    min_eigenvalues: Tuple[float, ...]
    residuals: KKTResiduals
    duals: Optional[DualVariables] = None
    iterations: int = 0
    solve_time: float = 0.0
    certificate: Optional[np.ndarray] = None

    @property
    def is_optimal(self) -> bool:
        return self.status in ("optimal", "near_optimal")


def block_min_eigenvalues(problem: SDPProblem, y: np.ndarray) -> Tuple[float, ...]:
    values = []
    for block in problem.blocks:
        values.append(float(np.linalg.eigvalsh(block.matrix(y))[0]))
    return tuple(values)


def primal_residual(problem: SDPProblem, y: np.ndarray) -> float:
    """max(|A y - b|_inf, cone violation) / (1 + max(|b|_inf, |F0|_inf, |lp_offset|_inf))."""
    violation = 0.0
    if problem.eq_matrix.shape[0]:
        violation = max(violation, float(np.max(np.abs(problem.eq_matrix @ y - problem.eq_rhs))))
    if problem.lp_matrix.shape[0]:
        violation = max(violation, float(np.max(-(problem.lp_matrix @ y + problem.lp_offset), initial=0.0)))
    violation = max(violation, float(np.max(problem.lower - y, initial=0.0)))
    violation = max(violation, float(np.max(y - problem.upper, initial=0.0)))
    for value in block_min_eigenvalues(problem, y):
        violation = max(violation, -value)
    scale = 1.0 + max(
        float(np.max(np.abs(problem.eq_rhs), initial=0.0)),
        float(np.max(np.abs(problem.lp_offset), initial=0.0)),
        max((float(np.max(np.abs(block.f0), initial=0.0)) for block in problem.blocks), default=0.0),
    )
    return violation / scale


def dual_objective(problem: SDPProblem, duals: DualVariables) -> float:
    """-h^T z - b^T nu + offset for the stacked conic data."""
    value = -float(problem.eq_rhs @ duals.eq) - float(problem.lp_offset @ duals.lp)
    for block, z in zip(problem.blocks, duals.blocks):
        value -= float(np.sum(block.f0 * z))
    finite_lower = np.isfinite(problem.lower)
    finite_upper = np.isfinite(problem.upper)
    value += float(problem.lower[finite_lower] @ duals.lower[finite_lower])
    value -= float(problem.upper[finite_upper] @ duals.upper[finite_upper])
    return value + problem.offset


def dual_residual(problem: SDPProblem, duals: DualVariables) -> float:
    """|c + G^T z + A^T nu|_inf / (1 + |c|_inf)."""
    r = problem.c.copy()
    for block, z in zip(problem.blocks, duals.blocks):
        r -= np.asarray(block.coefficients.T @ z.reshape(-1)).ravel()
    if problem.lp_matrix.shape[0]:
        r -= np.asarray(problem.lp_matrix.T @ duals.lp).ravel()
    if problem.eq_matrix.shape[0]:
        r += np.asarray(problem.eq_matrix.T @ duals.eq).ravel()
    r -= duals.lower
    r += duals.upper
    return float(np.max(np.abs(r), initial=0.0)) / (1.0 + float(np.max(np.abs(problem.c), initial=0.0)))


def residuals(problem: SDPProblem, y: np.ndarray, duals: Optional[DualVariables] = None) -> KKTResiduals:
    """
    KKT residuals recomputed from the problem data alone.

    The gap is |primal - dual| / (1 + |primal|). Dual quantities are NaN without duals.
    """
    primal = primal_residual(problem, y)
    if duals is None:
        return KKTResiduals(primal, float("nan"), float("nan"))
    p_obj = problem.objective(y)
    d_obj = dual_objective(problem, duals)
    return KKTResiduals(primal, dual_residual(problem, duals), abs(p_obj - d_obj) / (1.0 + abs(p_obj)))


def solution_from_point(
    problem: SDPProblem,
    y: np.ndarray,
    status: SolveStatus,
    duals: Optional[DualVariables] = None,
    iterations: int = 0,
    solve_time: float = 0.0,
    certificate: Optional[np.ndarray] = None,
) -> SDPSolution:
    """Package a point into an SDPSolution with every derived quantity recomputed."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        nan = float("nan")
        return SDPSolution(status, y, nan, nan, (), KKTResiduals(nan, nan, nan), duals, iterations, solve_time, certificate)
    return SDPSolution(
        status=status,
        y=y,
        objective=problem.objective(y),
        dual_objective=dual_objective(problem, duals) if duals is not None else float("nan"),
        min_eigenvalues=block_min_eigenvalues(problem, y),
        residuals=residuals(problem, y, duals),
        duals=duals,
        iterations=iterations,
        solve_time=solve_time,
        certificate=certificate,
    )
