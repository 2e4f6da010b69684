# Standard Library Imports
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple, Union

# Third-Party Library Imports
import numpy as np

# Local Application Imports
from src.common.constants import BUS_TYPE_REF


class CaseError(Exception):
    """Base exception for network case problems."""

    def __init__(self, message: str, original_exception: Union[Exception, None] = None):
        super().__init__(message)
        self.original_exception = original_exception
        self.message = message


class CaseSyntaxError(CaseError):
    """Case text could not be tokenized or a table is malformed."""

    def __init__(self, message: str, line_number: int, original_exception: Union[Exception, None] = None):
        super().__init__(f"line {line_number}: {message}", original_exception)
        self.line_number = line_number


class CaseSemanticError(CaseError):
    """Case text parsed but a record violates the model's rules."""

    def __init__(self, message: str, record: str, original_exception: Union[Exception, None] = None):
        super().__init__(f"{record}: {message}", original_exception)
        self.record = record


class InfeasibleCaseError(CaseSemanticError):
    """Limits that no operating point can satisfy (V_min > V_max, P_min > P_max)."""


@dataclass(frozen=True)
class BusRecord:
    """Bus data in per unit. `bus_id` is the external identifier from the case file."""

    bus_id: int
    bus_type: int
    p_load: float
    q_load: float
    g_shunt: float
    b_shunt: float
    v_min: float
    v_max: float


@dataclass(frozen=True)
class GenRecord:
    """
    Generator limits in per unit and cost coefficients for power in per unit.

    Attributes:
        gen_id (int): 1-based row of the generator table, used in error messages.
        bus (int): Internal bus index.
    """

    gen_id: int
    bus: int
    p_min: float
    p_max: float
    q_min: float
    q_max: float
    c2: float = 0.0
    c1: float = 0.0
    c0: float = 0.0


@dataclass(frozen=True)
class LineRecord:
    """
    Pi-model line with an ideal transformer tap*exp(j*shift) at the from end.

    `b_sh` is the total charging susceptance; each terminal carries half of it. `s_max` of 0 means the
    line has no flow limit.
    """

    line_id: int
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_sh: float = 0.0
    tap: float = 1.0
    shift: float = 0.0
    s_max: float = 0.0

    def __post_init__(self) -> None:
        if self.r * self.r + self.x * self.x <= 0:
            raise CaseSemanticError("series impedance must be nonzero", f"branch {self.line_id}")
        if self.tap <= 0:
            raise CaseSemanticError("tap ratio must be positive", f"branch {self.line_id}")

    @property
    def series_admittance(self) -> complex:
        return 1.0 / complex(self.r, self.x)

    @property
    def impedance(self) -> float:
        return float(abs(complex(self.r, self.x)))


class BusGeneration(NamedTuple):
    """Per-bus aggregation of generator limits and cost, as the bus-injection model uses them."""
    has_gen: np.ndarray
    p_min: np.ndarray
    p_max: np.ndarray
    q_min: np.ndarray
    q_max: np.ndarray
    c2: np.ndarray
    c1: np.ndarray
    c0: np.ndarray


@dataclass(frozen=True)
class NetworkCase:
    name: str
    base_mva: float
    buses: Tuple[BusRecord, ...]
    gens: Tuple[GenRecord, ...]
    lines: Tuple[LineRecord, ...]
    ref_bus: int

    def __post_init__(self) -> None:
        """Check the structural invariants every consumer relies on."""
        n = len(self.buses)
        if n == 0:
            raise CaseSemanticError("case has no buses", "mpc.bus")
        if self.base_mva <= 0:
            raise CaseSemanticError("baseMVA must be positive", "mpc.baseMVA")
        if not 0 <= self.ref_bus < n:
            raise CaseSemanticError(f"reference bus index {self.ref_bus} out of range", "mpc.bus")
        for bus in self.buses:
            if bus.v_min > bus.v_max:
                raise InfeasibleCaseError(
                    f"V_min {bus.v_min} exceeds V_max {bus.v_max}", f"bus {bus.bus_id}"
                )
        for gen in self.gens:
            if not 0 <= gen.bus < n:
                raise CaseSemanticError("generator bus out of range", f"gen {gen.gen_id}")
            if gen.c2 < 0:
                raise CaseSemanticError(f"quadratic cost coefficient {gen.c2} is negative", f"gen {gen.gen_id}")
            if gen.p_min > gen.p_max or gen.q_min > gen.q_max:
                raise InfeasibleCaseError("lower generation limit exceeds upper limit", f"gen {gen.gen_id}")
        for line in self.lines:
            if not (0 <= line.from_bus < n and 0 <= line.to_bus < n):
                raise CaseSemanticError("line endpoint out of range", f"branch {line.line_id}")
            if line.from_bus == line.to_bus:
                raise CaseSemanticError("line connects a bus to itself", f"branch {line.line_id}")

    @property
    def n(self) -> int:
        return len(self.buses)

    @property
    def generator_buses(self) -> List[int]:
        return sorted({gen.bus for gen in self.gens})

    @property
    def p_load(self) -> np.ndarray:
        return np.array([bus.p_load for bus in self.buses])

    @property
    def q_load(self) -> np.ndarray:
        return np.array([bus.q_load for bus in self.buses])

    @property
    def v_min(self) -> np.ndarray:
        return np.array([bus.v_min for bus in self.buses])

    @property
    def v_max(self) -> np.ndarray:
        return np.array([bus.v_max for bus in self.buses])

    def bus_index(self, bus_id: int) -> Optional[int]:
        """Internal index of an external bus id."""
        for k, bus in enumerate(self.buses):
            if bus.bus_id == bus_id:
                return k
        return None

    def neighbors(self, bus: int) -> List[int]:
        found = set()
        for line in self.lines:
            if line.from_bus == bus:
                found.add(line.to_bus)
            elif line.to_bus == bus:
                found.add(line.from_bus)
        return sorted(found)


def aggregate_bus_generation(case: NetworkCase) -> BusGeneration:
    """
    Sum generator limits per bus and combine their costs by equal sharing of the bus output.

    N units at one bus producing P together each produce P/N, so the bus cost is
    sum_g c2_g/N^2 P^2 + sum_g c1_g/N P + sum_g c0_g. Non-generator buses get all-zero limits.

    Args:
        case (NetworkCase): Network with per-generator records.

    Returns:
        BusGeneration: Arrays indexed by bus.
    """
    n = case.n
    counts = np.zeros(n, dtype=int)
    agg = {key: np.zeros(n) for key in ("p_min", "p_max", "q_min", "q_max", "c2", "c1", "c0")}
    for gen in case.gens:
        counts[gen.bus] += 1
    for gen in case.gens:
        k = gen.bus
        share = float(counts[k])
        agg["p_min"][k] += gen.p_min
        agg["p_max"][k] += gen.p_max
        agg["q_min"][k] += gen.q_min
        agg["q_max"][k] += gen.q_max
        agg["c2"][k] += gen.c2 / share**2
        agg["c1"][k] += gen.c1 / share
        agg["c0"][k] += gen.c0
    return BusGeneration(has_gen=counts > 0, **agg)


def reference_buses(case: NetworkCase) -> List[int]:
    """All buses flagged as reference in the case data (the first one is `case.ref_bus`)."""
    return [k for k, bus in enumerate(case.buses) if bus.bus_type == BUS_TYPE_REF]
