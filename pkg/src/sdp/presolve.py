# Standard Library Imports
from dataclasses import dataclass
from typing import Dict, List, Literal, NamedTuple, Optional, Tuple

# Third-Party Library Imports
import numpy as np
import scipy.linalg
import scipy.sparse as sp

# Local Application Imports
from src.common import logger

from .problem import DualVariables, SDPBlock, SDPProblem

OriginKind = Literal["eq", "lp", "block"]


class EqualityOrigin(NamedTuple):
    """Where an equality row of the reduced problem comes from (`row`/`col` only for block pairs)."""
    kind: OriginKind
    first: int
    second: int = -1
    row: int = -1
    col: int = -1


@dataclass(frozen=True, eq=False)
class PresolveResult:
    """
    A presolved problem and the bookkeeping needed to map its duals back.

    Attributes:
        original (SDPProblem): Input problem.
        reduced (SDPProblem): Problem handed to the solver.
        kept_blocks (Tuple[int, ...]): Original block indices kept as PSD blocks.
        kept_lp_rows (Tuple[int, ...]): Original linear rows kept as inequalities.
        block_pairs (Tuple[Tuple[int, int], ...]): Opposed block pairs turned into equalities.
        lp_pairs (Tuple[Tuple[int, int], ...]): Opposed linear rows turned into equalities.
        eq_origins (Tuple[EqualityOrigin, ...]): Origin of each equality row of `reduced`.
        infeasible (bool): True if the equalities are inconsistent.
    """

    original: SDPProblem
    reduced: SDPProblem
    kept_blocks: Tuple[int, ...]
    kept_lp_rows: Tuple[int, ...]
    block_pairs: Tuple[Tuple[int, int], ...]
    lp_pairs: Tuple[Tuple[int, int], ...]
    eq_origins: Tuple[EqualityOrigin, ...]
    infeasible: bool = False

    def restore_duals(self, duals: DualVariables) -> DualVariables:
        """Express duals of the reduced problem as duals of the original one."""
        original = self.original
        blocks: List[Optional[np.ndarray]] = [None] * len(original.blocks)
        for reduced_pos, block_index in enumerate(self.kept_blocks):
            blocks[block_index] = duals.blocks[reduced_pos]

        pair_matrices: Dict[int, np.ndarray] = {
            first: np.zeros((original.blocks[first].dim,) * 2) for first, _ in self.block_pairs
        }
        lp = np.zeros(original.lp_matrix.shape[0])
        lp[list(self.kept_lp_rows)] = duals.lp
        eq = np.zeros(original.eq_matrix.shape[0])
        for origin, nu in zip(self.eq_origins, duals.eq):
            if origin.kind == "eq":
                eq[origin.first] = nu
            elif origin.kind == "lp":
                lp[origin.second] = max(nu, 0.0)
                lp[origin.first] = max(-nu, 0.0)
            else:
                target = pair_matrices[origin.first]
                if origin.row == origin.col:
                    target[origin.row, origin.col] = nu
                else:
                    target[origin.row, origin.col] = target[origin.col, origin.row] = nu / 2.0

        for first, second in self.block_pairs:
            values, vectors = np.linalg.eigh(pair_matrices[first])
            positive = (vectors * np.maximum(values, 0.0)) @ vectors.T
            negative = (vectors * np.maximum(-values, 0.0)) @ vectors.T
            blocks[second] = positive
            blocks[first] = negative

        return DualVariables(
            blocks=tuple(b if b is not None else np.zeros((1, 1)) for b in blocks),
            lp=lp,
            eq=eq,
            lower=duals.lower,
            upper=duals.upper,
        )


def _block_signature(f0: np.ndarray, coefficients: sp.csc_matrix) -> Tuple[int, bytes, bytes, bytes, bytes]:
    canonical = sp.csc_matrix(coefficients)
    canonical.sum_duplicates()
    canonical.sort_indices()
    canonical.eliminate_zeros()
    return (
        f0.shape[0],
        (f0 + 0.0).tobytes(),
        canonical.indices.tobytes(),
        canonical.indptr.tobytes(),
        canonical.data.tobytes(),
    )


def _opposed_blocks(blocks: Tuple[SDPBlock, ...]) -> List[Tuple[int, int]]:
    signatures: Dict[Tuple[int, bytes, bytes, bytes, bytes], List[int]] = {}
    for i, block in enumerate(blocks):
        signatures.setdefault(_block_signature(block.f0, block.coefficients), []).append(i)
    pairs: List[Tuple[int, int]] = []
    used = set()
    for i, block in enumerate(blocks):
        if i in used:
            continue
        mirror = signatures.get(_block_signature(-block.f0, -block.coefficients), [])
        partner = next((j for j in mirror if j != i and j not in used), None)
        if partner is not None:
            used.update((i, partner))
            pairs.append((i, partner))
    return pairs


def _row_key(matrix: sp.csr_matrix, offset: np.ndarray, i: int, sign: float) -> Tuple:
    start, end = matrix.indptr[i], matrix.indptr[i + 1]
    cols = tuple(matrix.indices[start:end].tolist())
    vals = tuple((sign * matrix.data[start:end]).tolist())
    return cols, vals, sign * float(offset[i])


def _opposed_rows(matrix: sp.csr_matrix, offset: np.ndarray) -> List[Tuple[int, int]]:
    keys: Dict[Tuple, List[int]] = {}
    for i in range(matrix.shape[0]):
        if matrix.indptr[i + 1] > matrix.indptr[i]:
            keys.setdefault(_row_key(matrix, offset, i, 1.0), []).append(i)
    pairs: List[Tuple[int, int]] = []
    used = set()
    for i in range(matrix.shape[0]):
        if i in used or matrix.indptr[i + 1] == matrix.indptr[i]:
            continue
        partner = next((j for j in keys.get(_row_key(matrix, offset, i, -1.0), []) if j not in used and j != i), None)
        if partner is not None:
            used.update((i, partner))
            pairs.append((i, partner))
    return pairs


def _independent_rows(a: np.ndarray, b: np.ndarray, tol: float) -> Tuple[List[int], bool]:
    """Rows of [a | b] kept by QR with column pivoting on a^T, and whether the dropped rows are consistent."""
    if a.shape[0] == 0:
        return [], True
    _, r, pivots = scipy.linalg.qr(a.T, mode="economic", pivoting=True)
    diagonal = np.abs(np.diag(r))
    if diagonal.size == 0 or diagonal[0] == 0:
        consistent = bool(np.all(np.abs(b) <= tol))
        return [], consistent
    rank = int(np.sum(diagonal > tol * max(a.shape) * diagonal[0]))
    kept = sorted(pivots[:rank].tolist())
    dropped = sorted(pivots[rank:].tolist())
    if not dropped:
        return kept, True
    weights, *_ = np.linalg.lstsq(a[kept].T, a[dropped].T, rcond=None)
    predicted = weights.T @ b[kept]
    consistent = bool(np.all(np.abs(predicted - b[dropped]) <= 1e-8 * (1.0 + np.abs(b[dropped]))))
    return kept, consistent


def presolve(problem: SDPProblem, rank_tol: float = 1e-12) -> PresolveResult:
    """
    Turn opposed constraint pairs into equalities and drop dependent equality rows.

    Two blocks with F_j = -F_i (constants included) force the block to vanish, so their upper triangles
    become equalities; two linear rows that are exact negatives become one equality. Dependent rows of
    the combined equality system are removed by QR with column pivoting.

    Args:
        problem (SDPProblem): Problem to reduce.
        rank_tol (float): Relative pivot threshold for the rank decision.

    Returns:
        PresolveResult: Reduced problem with dual bookkeeping; `infeasible` is set when the equalities
            contradict each other.
    """
    block_pairs = _opposed_blocks(problem.blocks)
    lp_pairs = _opposed_rows(problem.lp_matrix, problem.lp_offset)
    paired_blocks = {i for pair in block_pairs for i in pair}
    paired_rows = {i for pair in lp_pairs for i in pair}

    rows: List[np.ndarray] = []
    rhs: List[float] = []
    origins: List[EqualityOrigin] = []
    dense_eq = problem.eq_matrix.toarray()
    for i in range(dense_eq.shape[0]):
        rows.append(dense_eq[i])
        rhs.append(float(problem.eq_rhs[i]))
        origins.append(EqualityOrigin("eq", i))

    infeasible = False
    lp_dense = problem.lp_matrix.tocsr()
    for first, second in lp_pairs:
        rows.append(lp_dense[first].toarray().ravel())
        rhs.append(-float(problem.lp_offset[first]))
        origins.append(EqualityOrigin("lp", first, second))

    for first, second in block_pairs:
        block = problem.blocks[first]
        d = block.dim
        coefficients = block.coefficients.tocsr()
        for r in range(d):
            for c in range(r, d):
                row = coefficients[r * d + c].toarray().ravel()
                constant = float(block.f0[r, c])
                if not row.any():
                    if constant != 0.0:
                        infeasible = True
                    continue
                rows.append(row)
                rhs.append(-constant)
                origins.append(EqualityOrigin("block", first, second, r, c))

    a = np.array(rows).reshape(len(rows), problem.num_vars)
    b = np.array(rhs)
    kept, consistent = _independent_rows(a, b, rank_tol)
    infeasible = infeasible or not consistent
    if infeasible:
        logger.info("Presolve found inconsistent equalities; the problem is infeasible.")

    kept_blocks = tuple(i for i in range(len(problem.blocks)) if i not in paired_blocks)
    kept_lp_rows = tuple(i for i in range(problem.lp_matrix.shape[0]) if i not in paired_rows)
    reduced = SDPProblem.build(
        c=problem.c,
        blocks=[problem.blocks[i] for i in kept_blocks],
        lp_matrix=lp_dense[list(kept_lp_rows)] if kept_lp_rows else None,
        lp_offset=problem.lp_offset[list(kept_lp_rows)],
        eq_matrix=sp.csr_matrix(a[kept]) if kept else None,
        eq_rhs=b[kept],
        lower=problem.lower,
        upper=problem.upper,
        offset=problem.offset,
        names=problem.names,
    )
    logger.debug(
        f"Presolve: {len(block_pairs)} block pairs and {len(lp_pairs)} row pairs to equalities, "
        f"{len(rows) - len(kept)} dependent equalities dropped."
    )
    return PresolveResult(
        original=problem,
        reduced=reduced,
        kept_blocks=kept_blocks,
        kept_lp_rows=kept_lp_rows,
        block_pairs=tuple(block_pairs),
        lp_pairs=tuple(lp_pairs),
        eq_origins=tuple(origins[i] for i in kept),
        infeasible=infeasible,
    )
