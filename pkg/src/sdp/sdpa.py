"""
sdpa.py

SDPA sparse format (.dat-s) export and import, and parsing of SDPA-format solver output.

SDPA states the problem as minimize c^T y subject to sum_i y_i F_i - F_0 >= 0, so the exported F_0 is the
negated constant matrix of each block. Linear rows, equalities and bounds have no native SDPA form; they
are written as diagonal blocks, which leading `*` comment lines identify for the importer:

    * offset <value>       objective constant (omitted when zero)
    * block <k> <name>     name of PSD block k
    * lp-block <k>         diagonal block k holds the linear rows
    * eq-block <k>         diagonal block k holds [A; -A] y - [b; -b] >= 0
    * bound-block <k>      diagonal block k holds y_i - l_i >= 0 then u_i - y_i >= 0

Unmarked diagonal blocks in foreign files are read as linear rows.
"""

# Standard Library Imports
import re
from typing import Dict, List, NamedTuple, Optional, Tuple

# Third-Party Library Imports
import numpy as np
import scipy.sparse as sp

# Local Application Imports
from src.common import SolverSettings, SolveStatus, logger

from .problem import DualVariables, SDPBlock, SDPError, SDPProblem, SDPSolution, solution_from_point

Entry = Tuple[int, int, int, int, float]  # (block, i, j, matno, value), 1-based block/i/j

_SEPARATORS = re.compile(r"[{}(),]")
_SDPA_PHASES: Dict[str, SolveStatus] = {
    "pdOPT": "optimal",
    "pINF_dFEAS": "infeasible",
    "pINF": "infeasible",
    "dINF": "unbounded",
    "pUNBD": "unbounded",
    "pFEAS_dINF": "unbounded",
}


class SDPFormatError(SDPError):
    """Raised for malformed SDPA problem or solution text."""


class _Layout(NamedTuple):
    """Positions of the auxiliary diagonal blocks (1-based, 0 if absent) and the bound rows."""

    num_psd: int
    lp_block: int
    eq_block: int
    bound_block: int
    lower_vars: np.ndarray
    upper_vars: np.ndarray


def _layout(problem: SDPProblem) -> _Layout:
    lower_vars = np.flatnonzero(np.isfinite(problem.lower))
    upper_vars = np.flatnonzero(np.isfinite(problem.upper))
    next_block = len(problem.blocks) + 1
    lp_block = eq_block = bound_block = 0
    if problem.lp_matrix.shape[0]:
        lp_block, next_block = next_block, next_block + 1
    if problem.eq_matrix.shape[0]:
        eq_block, next_block = next_block, next_block + 1
    if len(lower_vars) + len(upper_vars):
        bound_block = next_block
    return _Layout(len(problem.blocks), lp_block, eq_block, bound_block, lower_vars, upper_vars)


def _block_entries(index: int, block: SDPBlock) -> List[Entry]:
    d = block.dim
    entries: List[Entry] = []
    rows, cols = np.triu_indices(d)
    for r, c in zip(rows.tolist(), cols.tolist()):
        value = -float(block.f0[r, c])
        if value != 0.0:
            entries.append((index, r + 1, c + 1, 0, value))
    coo = block.coefficients.tocoo()
    for flat, var, value in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
        r, c = divmod(flat, d)
        if r <= c and value != 0.0:
            entries.append((index, r + 1, c + 1, var + 1, float(value)))
    return entries


def _diagonal_entries(index: int, matrix: sp.csr_matrix, constants: np.ndarray) -> List[Entry]:
    """Rows matrix @ y - constants >= 0 as a diagonal block."""
    entries: List[Entry] = []
    for r, value in enumerate(constants.tolist()):
        if value != 0.0:
            entries.append((index, r + 1, r + 1, 0, float(value)))
    coo = matrix.tocoo()
    for r, var, value in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
        if value != 0.0:
            entries.append((index, r + 1, r + 1, var + 1, float(value)))
    return entries


def export_sdpa(problem: SDPProblem) -> str:
    """
    Write a problem as SDPA sparse text.

    Output is deterministic: entries are sorted by (block, i, j, variable) and floats use `repr`, which
    round-trips exactly.

    Args:
        problem (SDPProblem): Problem to export.

    Returns:
        str: The .dat-s text.
    """
    layout = _layout(problem)
    m = problem.num_vars
    comments: List[str] = []
    if problem.offset != 0.0:
        comments.append(f"* offset {problem.offset!r}")
    for k, block in enumerate(problem.blocks, start=1):
        comments.append(f"* block {k} {block.name}")

    sizes: List[int] = [block.dim for block in problem.blocks]
    entries: List[Entry] = []
    for k, block in enumerate(problem.blocks, start=1):
        entries.extend(_block_entries(k, block))
    if layout.lp_block:
        comments.append(f"* lp-block {layout.lp_block}")
        sizes.append(-problem.lp_matrix.shape[0])
        entries.extend(_diagonal_entries(layout.lp_block, problem.lp_matrix, -problem.lp_offset))
    if layout.eq_block:
        comments.append(f"* eq-block {layout.eq_block}")
        sizes.append(-2 * problem.eq_matrix.shape[0])
        stacked = sp.vstack([problem.eq_matrix, -problem.eq_matrix]).tocsr()
        entries.extend(
            _diagonal_entries(layout.eq_block, stacked, np.concatenate([problem.eq_rhs, -problem.eq_rhs]))
        )
    if layout.bound_block:
        comments.append(f"* bound-block {layout.bound_block}")
        num_lower, num_upper = len(layout.lower_vars), len(layout.upper_vars)
        sizes.append(-(num_lower + num_upper))
        rows = np.arange(num_lower + num_upper)
        cols = np.concatenate([layout.lower_vars, layout.upper_vars])
        signs = np.concatenate([np.ones(num_lower), -np.ones(num_upper)])
        bound_matrix = sp.csr_matrix((signs, (rows, cols)), shape=(len(rows), m))
        constants = np.concatenate([problem.lower[layout.lower_vars], -problem.upper[layout.upper_vars]])
        entries.extend(_diagonal_entries(layout.bound_block, bound_matrix, constants))

    if not sizes:
        raise SDPFormatError("SDPA needs at least one block; the problem has no constraints.")
    entries.sort(key=lambda e: (e[0], e[1], e[2], e[3]))
    lines = comments + [
        str(m),
        str(len(sizes)),
        " ".join(str(s) for s in sizes),
        " ".join(repr(float(v)) for v in problem.c),
    ]
    lines.extend(f"{mat} {blk} {i} {j} {value!r}" for blk, i, j, mat, value in entries)
    return "\n".join(lines) + "\n"


def _tokens(line: str) -> List[str]:
    return _SEPARATORS.sub(" ", line).split()


def import_sdpa(text: str) -> SDPProblem:
    """
    Read SDPA sparse text into an SDPProblem.

    Args:
        text (str): .dat-s content, optionally with the structure comments written by `export_sdpa`.

    Returns:
        SDPProblem: The problem; coefficients written by `export_sdpa` come back bit-exactly.

    Raises:
        SDPFormatError: On missing header fields, bad numbers or out-of-range indices.
    """
    offset = 0.0
    names: Dict[int, str] = {}
    roles: Dict[int, str] = {}
    body: List[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line[0] in "*\"":
            parts = line[1:].split()
            if len(parts) >= 2 and parts[0] == "offset":
                offset = float(parts[1])
            elif len(parts) >= 2 and parts[0] in ("lp-block", "eq-block", "bound-block"):
                roles[int(parts[1])] = parts[0]
            elif len(parts) >= 3 and parts[0] == "block":
                names[int(parts[1])] = " ".join(parts[2:])
            continue
        body.append(line)
    if not body:
        raise SDPFormatError("SDPA text is empty.")

    try:
        tokens = [tok for line in body for tok in _tokens(line)]
        m = int(tokens[0])
        nblocks = int(tokens[1])
        sizes = [int(float(tok)) for tok in tokens[2 : 2 + nblocks]]
        pos = 2 + nblocks
        c = np.array([float(tok) for tok in tokens[pos : pos + m]])
        pos += m
        rest = tokens[pos:]
    except (IndexError, ValueError) as e:
        raise SDPFormatError("Malformed SDPA header.", e) from e
    if len(sizes) != nblocks or c.shape[0] != m:
        raise SDPFormatError("SDPA header is truncated.")
    if len(rest) % 5:
        raise SDPFormatError("SDPA entry lines must have five fields.")

    per_block: Dict[int, List[Tuple[int, int, int, float]]] = {k: [] for k in range(1, nblocks + 1)}
    try:
        for idx in range(0, len(rest), 5):
            mat, blk, i, j = (int(tok) for tok in rest[idx : idx + 4])
            value = float(rest[idx + 4])
            if not (0 <= mat <= m and 1 <= blk <= nblocks):
                raise SDPFormatError(f"SDPA entry {rest[idx:idx + 5]} is out of range.")
            d = abs(sizes[blk - 1])
            if not (1 <= i <= d and 1 <= j <= d):
                raise SDPFormatError(f"SDPA entry {rest[idx:idx + 5]} is out of range.")
            if sizes[blk - 1] < 0 and i != j:
                raise SDPFormatError(f"Off-diagonal entry in diagonal block {blk}.")
            per_block[blk].append((mat, min(i, j) - 1, max(i, j) - 1, value))
    except ValueError as e:
        raise SDPFormatError("Malformed SDPA entry.", e) from e

    blocks: List[SDPBlock] = []
    lp_rows: List[Tuple[sp.csr_matrix, np.ndarray]] = []
    eq_matrix: Optional[sp.csr_matrix] = None
    eq_rhs = np.zeros(0)
    lower = np.full(m, -np.inf)
    upper = np.full(m, np.inf)
    for k in range(1, nblocks + 1):
        size = sizes[k - 1]
        entries = per_block[k]
        role = roles.get(k)
        if size > 0 and role is None:
            blocks.append(_psd_block(names.get(k, f"block{k}"), size, entries, m))
            continue
        matrix, constants = _diagonal_rows(abs(size), entries, m)
        if role == "eq-block":
            q = abs(size) // 2
            eq_matrix, eq_rhs = matrix[:q], constants[:q]
        elif role == "bound-block":
            for r in range(matrix.shape[0]):
                row = matrix.getrow(r)
                if row.nnz != 1:
                    raise SDPFormatError(f"Bound row {r + 1} must reference exactly one variable.")
                var, sign = int(row.indices[0]), float(row.data[0])
                if sign > 0:
                    lower[var] = constants[r]
                else:
                    upper[var] = -constants[r]
        else:
            lp_rows.append((matrix, -constants))

    lp_matrix = sp.vstack([rows for rows, _ in lp_rows]).tocsr() if lp_rows else None
    lp_offset = np.concatenate([off for _, off in lp_rows]) if lp_rows else None
    return SDPProblem.build(
        c=c,
        blocks=blocks,
        lp_matrix=lp_matrix,
        lp_offset=lp_offset,
        eq_matrix=eq_matrix,
        eq_rhs=eq_rhs,
        lower=lower,
        upper=upper,
        offset=offset,
    )


def _psd_block(name: str, d: int, entries: List[Tuple[int, int, int, float]], m: int) -> SDPBlock:
    f0 = np.zeros((d, d))
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    for mat, i, j, value in entries:
        if mat == 0:
            f0[i, j] = f0[j, i] = -value
            continue
        rows.append(i * d + j)
        cols.append(mat - 1)
        vals.append(value)
        if i != j:
            rows.append(j * d + i)
            cols.append(mat - 1)
            vals.append(value)
    coefficients = sp.csc_matrix((vals, (rows, cols)), shape=(d * d, m))
    coefficients.sum_duplicates()
    return SDPBlock(name=name, f0=f0 + 0.0, coefficients=coefficients)


def _diagonal_rows(d: int, entries: List[Tuple[int, int, int, float]], m: int) -> Tuple[sp.csr_matrix, np.ndarray]:
    constants = np.zeros(d)
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    for mat, i, _, value in entries:
        if mat == 0:
            constants[i] = value
        else:
            rows.append(i)
            cols.append(mat - 1)
            vals.append(value)
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(d, m))
    matrix.sum_duplicates()
    return matrix, constants


def _parse_sdpa_out(text: str) -> Tuple[np.ndarray, Optional[SolveStatus]]:
    match = re.search(r"xVec\s*=\s*\{([^}]*)\}", text)
    if match is None:
        raise SDPFormatError("SDPA output has no xVec.")
    y = np.array([float(tok) for tok in _tokens(match.group(1))])
    status: Optional[SolveStatus] = None
    phase = re.search(r"phase\.value\s*=\s*(\S+)", text)
    if phase is not None:
        status = _SDPA_PHASES.get(phase.group(1), "numerical_failure")
    objective = re.search(r"objValPrimal\s*=\s*(\S+)", text)
    if objective is not None:
        logger.debug(f"SDPA reported primal objective {objective.group(1)}.")
    return y, status


def _parse_csdp_sol(text: str, problem: SDPProblem) -> Tuple[np.ndarray, DualVariables]:
    lines = [line for line in text.splitlines() if line.strip()]
    try:
        y = np.array([float(tok) for tok in lines[0].split()])
        layout = _layout(problem)
        x_blocks: Dict[int, np.ndarray] = {}
        for line in lines[1:]:
            fields = line.split()
            if len(fields) != 5:
                raise SDPFormatError(f"Malformed solution line {line!r}.")
            if fields[0] != "2":
                continue
            blk, i, j = (int(tok) for tok in fields[1:4])
            value = float(fields[4])
            if blk not in x_blocks:
                x_blocks[blk] = np.zeros((_block_size(problem, layout, blk),) * 2)
            x_blocks[blk][i - 1, j - 1] = x_blocks[blk][j - 1, i - 1] = value
    except (IndexError, ValueError) as e:
        raise SDPFormatError("Malformed CSDP solution text.", e) from e

    def diagonal(blk: int, size: int) -> np.ndarray:
        mat = x_blocks.get(blk)
        return np.diag(mat).copy() if mat is not None else np.zeros(size)

    blocks = tuple(
        x_blocks.get(k, np.zeros((block.dim, block.dim))) for k, block in enumerate(problem.blocks, start=1)
    )
    lp = diagonal(layout.lp_block, problem.lp_matrix.shape[0])
    q = problem.eq_matrix.shape[0]
    eq_pair = diagonal(layout.eq_block, 2 * q)
    bound = diagonal(layout.bound_block, len(layout.lower_vars) + len(layout.upper_vars))
    lower = np.zeros(problem.num_vars)
    upper = np.zeros(problem.num_vars)
    lower[layout.lower_vars] = bound[: len(layout.lower_vars)]
    upper[layout.upper_vars] = bound[len(layout.lower_vars) :]
    duals = DualVariables(blocks=blocks, lp=lp, eq=eq_pair[q:] - eq_pair[:q], lower=lower, upper=upper)
    return y, duals


def _block_size(problem: SDPProblem, layout: _Layout, blk: int) -> int:
    if 1 <= blk <= layout.num_psd:
        return problem.blocks[blk - 1].dim
    if blk == layout.lp_block:
        return problem.lp_matrix.shape[0]
    if blk == layout.eq_block:
        return 2 * problem.eq_matrix.shape[0]
    if blk == layout.bound_block:
        return len(layout.lower_vars) + len(layout.upper_vars)
    raise SDPFormatError(f"Solution references unknown block {blk}.")


def import_sdpa_solution(
    text: str,
    problem: SDPProblem,
    status: Optional[SolveStatus] = None,
    settings: Optional[SolverSettings] = None,
) -> SDPSolution:
    """
    Parse an SDPA-format solver result for `problem`.

    SDPA `.out` files (xVec) and CSDP-style `.sol` files (y on the first line, then `matno block i j value`
    lines with matno 2 for the dual matrices) are recognized. Residuals are always recomputed from
    `problem`; dual quantities are NaN when the file carries no dual matrices.

    Args:
        text (str): Solver output.
        problem (SDPProblem): The problem that was exported.
        status (Optional[SolveStatus]): Status known from elsewhere (e.g. an exit code); otherwise taken from
            the file or decided from the recomputed residuals.
        settings (Optional[SolverSettings]): Tolerances for the residual-based status.

    Returns:
        SDPSolution: Parsed solution.

    Raises:
        SDPFormatError: If the text is empty, malformed or has the wrong number of variables.
    """
    settings = settings or SolverSettings()
    if not text.strip():
        raise SDPFormatError("Solver output is empty.")
    duals: Optional[DualVariables] = None
    if "xVec" in text:
        y, file_status = _parse_sdpa_out(text)
    else:
        y, duals = _parse_csdp_sol(text, problem)
        file_status = None
    if y.shape[0] != problem.num_vars:
        raise SDPFormatError(f"Solution has {y.shape[0]} entries, the problem has {problem.num_vars} variables.")

    solution = solution_from_point(problem, y, "optimal", duals)
    decided = status or file_status
    if decided is None or decided == "optimal":
        primal, dual, gap = solution.residuals
        checks = [primal] if duals is None else [primal, dual, gap]
        if all(value <= settings.tol for value in checks):
            decided = "optimal"
        elif all(value <= settings.near_optimal_factor * settings.tol for value in checks):
            decided = "near_optimal"
        else:
            decided = "numerical_failure"
    if decided in ("infeasible", "unbounded"):
        return solution_from_point(problem, np.full(problem.num_vars, np.nan), decided, duals, certificate=y)
    return solution_from_point(problem, y, decided, duals)
