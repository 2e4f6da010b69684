"""
case_parser.py

Reader for the MATPOWER table subset (baseMVA, bus, gen, branch, gencost) and the canonical JSON
serialization of NetworkCase.
"""

# Standard Library Imports
import json
import math
import re
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Tuple

# Local Application Imports
from src.common import logger
from src.common.constants import BUS_TYPE_ISOLATED, BUS_TYPE_REF, POLYNOMIAL_COST_MODEL

from .network_case import (
    BusRecord,
    CaseError,
    CaseSemanticError,
    CaseSyntaxError,
    GenRecord,
    LineRecord,
    NetworkCase,
)

_ASSIGNMENT = re.compile(r"^\s*mpc\.(\w+)\s*=\s*(.*)$")
_REQUIRED_TABLES = ("bus", "gen", "branch")
_MIN_COLUMNS = {"bus": 13, "gen": 10, "branch": 11, "gencost": 4}

Row = Tuple[int, List[float]]


def _strip_comment(line: str) -> str:
    return line.split("%", 1)[0]


def _parse_numbers(text: str, line_number: int) -> List[float]:
    tokens = [t for t in re.split(r"[\s,]+", text.strip()) if t]
    values: List[float] = []
    for token in tokens:
        try:
            values.append(float(token))
        except ValueError as e:
            raise CaseSyntaxError(f"invalid number '{token}'", line_number, e) from e
    return values


def _scan_tables(text: str) -> Tuple[Optional[float], Dict[str, List[Row]]]:
    """Split case text into baseMVA and numeric tables keyed by name, rows tagged with line numbers."""
    base_mva: Optional[float] = None
    tables: Dict[str, List[Row]] = {}
    current: Optional[str] = None
    opened_at = 0
    skipping_cell = False
    pending: List[float] = []
    pending_line = 0

    def flush() -> None:
        nonlocal pending
        if pending and current is not None:
            tables[current].append((pending_line, pending))
        pending = []

    lines = text.splitlines()
    for line_number, raw in enumerate(lines, start=1):
        line = _strip_comment(raw)
        if skipping_cell:
            if "}" in line:
                skipping_cell = False
            continue

        if current is None:
            match = _ASSIGNMENT.match(line)
            if not match:
                continue
            name, rhs = match.group(1), match.group(2).strip()
            if rhs.startswith("["):
                current, opened_at = name, line_number
                tables[name] = []
                line = rhs[1:]
            elif rhs.startswith("{"):
                skipping_cell = "}" not in rhs
                continue
            else:
                if name == "baseMVA":
                    values = _parse_numbers(rhs.rstrip(";"), line_number)
                    if len(values) != 1:
                        raise CaseSyntaxError("baseMVA must be a single number", line_number)
                    base_mva = values[0]
                continue

        closing = line.find("]")
        body = line if closing < 0 else line[:closing]
        for i, chunk in enumerate(body.split(";")):
            if i > 0:
                flush()
            values = _parse_numbers(chunk, line_number)
            if values:
                if not pending:
                    pending_line = line_number
                pending.extend(values)
        flush()
        if closing >= 0:
            current = None

    if current is not None:
        raise CaseSyntaxError(f"table mpc.{current} opened here is never closed", opened_at)
    if skipping_cell:
        raise CaseSyntaxError("cell array is never closed", len(lines))
    return base_mva, tables


def parse_case(text: str, name: str = "case") -> NetworkCase:
    """
    Parse MATPOWER case text into a per-unit NetworkCase.

    Out-of-service generators and branches are dropped. Costs are converted so that they apply to power
    in per unit: c2 * base^2, c1 * base, c0.

    Args:
        text (str): Case file content.
        name (str): Case name recorded in the result.

    Returns:
        NetworkCase: Validated network.

    Raises:
        CaseSyntaxError: For malformed text, with the offending line number.
        CaseSemanticError: For duplicate bus ids, unknown bus references, negative c2 or
            piecewise-linear costs, with the record identifier.
    """
    base_mva, tables = _scan_tables(text)
    total_lines = len(text.splitlines())
    if base_mva is None:
        raise CaseSyntaxError("missing mpc.baseMVA", total_lines)
    for table in _REQUIRED_TABLES:
        if table not in tables:
            raise CaseSyntaxError(f"missing table mpc.{table}", total_lines)
    for table, rows in tables.items():
        minimum = _MIN_COLUMNS.get(table)
        for line_number, row in rows:
            if minimum is not None and len(row) < minimum:
                raise CaseSyntaxError(f"mpc.{table} row has {len(row)} columns, expected {minimum}", line_number)

    base = base_mva
    buses: List[BusRecord] = []
    index_of: Dict[int, int] = {}
    for line_number, row in tables["bus"]:
        bus_id = int(row[0])
        if bus_id in index_of:
            raise CaseSemanticError("duplicate bus id", f"bus {bus_id} (line {line_number})")
        index_of[bus_id] = len(buses)
        buses.append(
            BusRecord(
                bus_id=bus_id,
                bus_type=int(row[1]),
                p_load=row[2] / base,
                q_load=row[3] / base,
                g_shunt=row[4] / base,
                b_shunt=row[5] / base,
                v_max=row[11],
                v_min=row[12],
            )
        )

    def resolve(bus_id: float, record: str) -> int:
        k = index_of.get(int(bus_id))
        if k is None:
            raise CaseSemanticError(f"unknown bus {int(bus_id)}", record)
        return k

    costs = _parse_costs(tables.get("gencost", []), base, len(tables["gen"]))
    gens: List[GenRecord] = []
    for row_number, (_, row) in enumerate(tables["gen"], start=1):
        record = f"gen {row_number}"
        bus = resolve(row[0], record)
        if row[7] <= 0:
            continue
        if buses[bus].bus_type == BUS_TYPE_ISOLATED:
            logger.warning(f"Generator {row_number} sits on isolated bus {buses[bus].bus_id}; ignored.")
            continue
        c2, c1, c0 = costs[row_number - 1]
        if c2 < 0:
            raise CaseSemanticError(f"quadratic cost coefficient {c2 / base**2} is negative", record)
        gens.append(
            GenRecord(
                gen_id=row_number,
                bus=bus,
                p_min=row[9] / base,
                p_max=row[8] / base,
                q_min=row[4] / base,
                q_max=row[3] / base,
                c2=c2,
                c1=c1,
                c0=c0,
            )
        )

    lines: List[LineRecord] = []
    for row_number, (_, row) in enumerate(tables["branch"], start=1):
        record = f"branch {row_number}"
        from_bus = resolve(row[0], record)
        to_bus = resolve(row[1], record)
        if row[10] <= 0:
            continue
        lines.append(
            LineRecord(
                line_id=row_number,
                from_bus=from_bus,
                to_bus=to_bus,
                r=row[2],
                x=row[3],
                b_sh=row[4],
                tap=row[8] if row[8] != 0 else 1.0,
                shift=math.radians(row[9]),
                s_max=row[5] / base,
            )
        )

    ref_bus = _pick_reference(buses, gens)
    case = NetworkCase(
        name=name,
        base_mva=base,
        buses=tuple(buses),
        gens=tuple(gens),
        lines=tuple(lines),
        ref_bus=ref_bus,
    )
    logger.debug(f"Parsed case {name}: {case.n} buses, {len(gens)} generators, {len(lines)} lines.")
    return case


def _parse_costs(rows: List[Row], base: float, num_gens: int) -> List[Tuple[float, float, float]]:
    if not rows:
        logger.warning("Case has no mpc.gencost table; generator costs default to zero.")
        return [(0.0, 0.0, 0.0)] * num_gens
    if len(rows) < num_gens:
        raise CaseSyntaxError(f"mpc.gencost has {len(rows)} rows for {num_gens} generators", rows[-1][0])
    costs: List[Tuple[float, float, float]] = []
    for row_number, (line_number, row) in enumerate(rows[:num_gens], start=1):
        record = f"gencost {row_number}"
        if int(row[0]) != POLYNOMIAL_COST_MODEL:
            raise CaseSemanticError("only polynomial cost curves are supported", record)
        ncost = int(row[3])
        coefficients = row[4 : 4 + ncost]
        if len(coefficients) != ncost:
            raise CaseSyntaxError(f"gencost row declares {ncost} coefficients", line_number)
        if ncost > 3:
            raise CaseSemanticError("cost polynomials above degree 2 are not supported", record)
        padded = [0.0] * (3 - ncost) + list(coefficients)
        c2, c1, c0 = padded
        costs.append((c2 * base**2, c1 * base, c0))
    return costs


def _pick_reference(buses: List[BusRecord], gens: List[GenRecord]) -> int:
    refs = [k for k, bus in enumerate(buses) if bus.bus_type == BUS_TYPE_REF]
    if len(refs) > 1:
        logger.warning(f"Case flags {len(refs)} reference buses; bus {buses[refs[0]].bus_id} fixes the angle.")
    if refs:
        return refs[0]
    fallback = min((gen.bus for gen in gens), default=0)
    logger.warning(f"Case has no reference bus; using bus {buses[fallback].bus_id}.")
    return fallback


def load_case(path: Path) -> NetworkCase:
    """
    Read and parse a case file.

    Raises:
        CaseError: If the file cannot be read or parsed.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CaseError(f"cannot read case file {path}: {e}", e) from e
    return parse_case(text, name=Path(path).stem)


def case_to_json(case: NetworkCase) -> str:
    """Canonical JSON text: sorted keys, floats in shortest round-trip form."""
    return json.dumps(asdict(case), sort_keys=True, indent=1)


def case_from_json(text: str) -> NetworkCase:
    """Inverse of `case_to_json`."""
    try:
        data = json.loads(text)
        return NetworkCase(
            name=data["name"],
            base_mva=data["base_mva"],
            buses=tuple(BusRecord(**bus) for bus in data["buses"]),
            gens=tuple(GenRecord(**gen) for gen in data["gens"]),
            lines=tuple(LineRecord(**line) for line in data["lines"]),
            ref_bus=data["ref_bus"],
        )
    except (KeyError, TypeError, json.JSONDecodeError) as e:
        raise CaseError(f"invalid case JSON: {e}", e) from e
