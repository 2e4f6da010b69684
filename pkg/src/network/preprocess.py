# Standard Library Imports
from typing import Dict, List, NamedTuple, Tuple

# Third-Party Library Imports
import networkx as nx

# Local Application Imports
from src.common import logger
from src.common.constants import BUS_TYPE_PQ, BUS_TYPE_PV, BUS_TYPE_REF

from .network_case import BusRecord, CaseError, GenRecord, LineRecord, NetworkCase


class PreprocessError(CaseError):
    """Raised when low-impedance merging cannot produce a valid network."""


class MergeResult(NamedTuple):
    """
    Outcome of low-impedance preprocessing.

    Attributes:
        case (NetworkCase): The reduced network.
        bus_map (Tuple[int, ...]): For every bus index of the input case, its index in `case`.
    """
    case: NetworkCase
    bus_map: Tuple[int, ...]


def _merged_type(members: List[BusRecord]) -> int:
    types = {bus.bus_type for bus in members}
    if BUS_TYPE_REF in types:
        return BUS_TYPE_REF
    if BUS_TYPE_PV in types:
        return BUS_TYPE_PV
    return min(types) if types else BUS_TYPE_PQ


def _combine_parallel(lines: List[LineRecord]) -> List[LineRecord]:
    """Replace parallel plain lines (tap 1, no shift) between the same buses by one equivalent line."""
    groups: Dict[Tuple[int, int], List[LineRecord]] = {}
    kept: List[LineRecord] = []
    for line in lines:
        if line.tap == 1.0 and line.shift == 0.0:
            key = (min(line.from_bus, line.to_bus), max(line.from_bus, line.to_bus))
            groups.setdefault(key, []).append(line)
        else:
            kept.append(line)

    for (l, m), members in groups.items():
        if len(members) == 1:
            kept.append(members[0])
            continue
        y_total = sum(line.series_admittance for line in members)
        z = 1.0 / y_total
        limits = [line.s_max for line in members]
        kept.append(
            LineRecord(
                line_id=min(line.line_id for line in members),
                from_bus=l,
                to_bus=m,
                r=float(z.real),
                x=float(z.imag),
                b_sh=sum(line.b_sh for line in members),
                s_max=0.0 if any(s == 0 for s in limits) else sum(limits),
            )
        )
    return sorted(kept, key=lambda line: line.line_id)


def _merge_once(case: NetworkCase, threshold: float) -> MergeResult:
    short = nx.Graph()
    short.add_nodes_from(range(case.n))
    short.add_edges_from(
        (line.from_bus, line.to_bus) for line in case.lines if line.impedance < threshold
    )

    groups = sorted((sorted(component) for component in nx.connected_components(short)), key=lambda g: g[0])
    bus_map = [0] * case.n
    buses: List[BusRecord] = []
    for new_index, group in enumerate(groups):
        members = [case.buses[k] for k in group]
        refs = [bus.bus_id for bus in members if bus.bus_type == BUS_TYPE_REF]
        if len(refs) > 1:
            raise PreprocessError(f"merging would join reference buses {refs}")
        keeper = case.ref_bus if case.ref_bus in group else group[0]
        for k in group:
            bus_map[k] = new_index
        buses.append(
            BusRecord(
                bus_id=case.buses[keeper].bus_id,
                bus_type=_merged_type(members),
                p_load=sum(bus.p_load for bus in members),
                q_load=sum(bus.q_load for bus in members),
                g_shunt=sum(bus.g_shunt for bus in members),
                b_shunt=sum(bus.b_shunt for bus in members),
                v_min=max(bus.v_min for bus in members),
                v_max=min(bus.v_max for bus in members),
            )
        )
        if len(group) > 1:
            logger.debug(f"Merged buses {[bus.bus_id for bus in members]} into bus {case.buses[keeper].bus_id}.")

    gens = [
        GenRecord(
            gen_id=gen.gen_id,
            bus=bus_map[gen.bus],
            p_min=gen.p_min,
            p_max=gen.p_max,
            q_min=gen.q_min,
            q_max=gen.q_max,
            c2=gen.c2,
            c1=gen.c1,
            c0=gen.c0,
        )
        for gen in case.gens
    ]
    lines = [
        LineRecord(
            line_id=line.line_id,
            from_bus=bus_map[line.from_bus],
            to_bus=bus_map[line.to_bus],
            r=line.r,
            x=line.x,
            b_sh=line.b_sh,
            tap=line.tap,
            shift=line.shift,
            s_max=line.s_max,
        )
        for line in case.lines
        if bus_map[line.from_bus] != bus_map[line.to_bus]
    ]

    reduced = NetworkCase(
        name=case.name,
        base_mva=case.base_mva,
        buses=tuple(buses),
        gens=tuple(gens),
        lines=tuple(_combine_parallel(lines)),
        ref_bus=bus_map[case.ref_bus],
    )
    return MergeResult(reduced, tuple(bus_map))


def preprocess_low_impedance(case: NetworkCase, threshold: float) -> MergeResult:
    """
    Merge buses joined by lines whose series impedance |R + jX| is below `threshold`.

    Loads and shunts of merged buses are summed, voltage bounds intersected, generators moved to the
    merged bus with their own records, and parallel plain lines combined. Merging repeats until no line
    is below the threshold, so the operation is idempotent.

    Args:
        case (NetworkCase): Network to reduce.
        threshold (float): Impedance threshold in per unit, nonnegative.

    Returns:
        MergeResult: Reduced case and the map from input bus indices to reduced indices.

    Raises:
        PreprocessError: If the threshold is negative or a merge would join two reference buses.
        InfeasibleCaseError: If intersected voltage bounds are empty.
    """
    if threshold < 0:
        raise PreprocessError(f"impedance threshold must be nonnegative, got {threshold}")

    bus_map = tuple(range(case.n))
    current = case
    while any(line.impedance < threshold for line in current.lines):
        step = _merge_once(current, threshold)
        bus_map = tuple(step.bus_map[k] for k in bus_map)
        current = step.case

    if current is not case:
        logger.info(f"Low-impedance preprocessing reduced {case.name} from {case.n} to {current.n} buses.")
    return MergeResult(current, bus_map)
