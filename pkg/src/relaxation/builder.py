"""
builder.py

Hierarchy-independent assembly of a sparse moment relaxation.

A builder walks the network once: one moment block per clique, localizing constraints for the bus limits,
Schur and direct forms of line-flow limits and quadratic costs, normalization and lifted-variable bounds.
Subclasses supply the algebra of their hierarchy (bases, polynomials, lifting, block entries).
"""

# Standard Library Imports
from abc import ABC, abstractmethod
from typing import List, Optional, Sequence, Tuple, Union

# Third-Party Library Imports
import numpy as np

# Local Application Imports
from src.common import Hierarchy, LinearForm, logger
from src.common.constants import CONSTANT_TERM, MAX_RELAXATION_ORDER
from src.network import (
    CostTerm,
    HermitianMatrixSet,
    NetworkCase,
    ObjectivePolynomial,
    aggregate_bus_generation,
    build_matrices,
    objective_polynomial,
)
from src.polynomial import MomentIndex, PolyC, PolyR
from src.sparsity import (
    ChordalStructure,
    build_graph,
    chordal_extend,
    clique_order,
    coupling_graph,
    merge_cliques,
    smallest_clique_containing,
)

from .blocks import (
    FirstOrderBlock,
    LinearConstraint,
    OrderTooLowError,
    Relaxation,
    SymbolicBlock,
    add_forms,
    schur_cost_block,
    schur_flow_block,
)
from .options import RelaxationOptions

Poly = Union[PolyR, PolyC]


def sparsity_structure(case: NetworkCase, options: Optional[RelaxationOptions] = None) -> ChordalStructure:
    """Chordal structure the relaxation blocks follow, per the graph and merge options."""
    options = options or RelaxationOptions()
    graph = coupling_graph(case) if options.couple_injections else build_graph(case)
    structure = chordal_extend(graph)
    if options.merge_cliques:
        structure = merge_cliques(structure)
    return structure


def dense_structure(case: NetworkCase) -> ChordalStructure:
    """Single-clique structure over all buses, i.e. the dense relaxation."""
    graph = build_graph(case)
    everything = list(range(case.n))
    graph.add_edges_from((a, b) for i, a in enumerate(everything) for b in everything[i + 1 :])
    return chordal_extend(graph)


def check_orders(orders: Sequence[int], n: int) -> Tuple[int, ...]:
    if len(orders) != n:
        raise ValueError(f"Expected {n} relaxation orders, got {len(orders)}.")
    if any(order < 1 or order > MAX_RELAXATION_ORDER for order in orders):
        raise ValueError(f"Relaxation orders must lie in [1, {MAX_RELAXATION_ORDER}], got {list(orders)}.")
    return tuple(int(order) for order in orders)


class RelaxationBuilder(ABC):
    """Shared assembly loop; one instance builds one relaxation."""

    kind: Hierarchy

    def __init__(
        self,
        case: NetworkCase,
        structure: ChordalStructure,
        orders: Sequence[int],
        options: Optional[RelaxationOptions] = None,
        matrices: Optional[HermitianMatrixSet] = None,
    ):
        self.case = case
        self.structure = structure
        self.orders = check_orders(orders, case.n)
        self.options = options or RelaxationOptions()
        self.matrices = matrices or build_matrices(case)
        self.clique_orders = [clique_order(clique, self.orders) for clique in structure.cliques]
        self.idx = self._new_index(2 * max(self.clique_orders + [max(self.orders)]))
        self.relaxation = Relaxation(
            kind=self.kind,
            idx=self.idx,
            orders=self.orders,
            structure=structure,
            ref_bus=case.ref_bus,
        )

    # Hierarchy-specific algebra

    @abstractmethod
    def _new_index(self, max_degree: int) -> MomentIndex: ...

    @abstractmethod
    def _basis(self, buses: Sequence[int], order: int) -> list: ...

    @abstractmethod
    def _first_order(self, basis: list) -> Tuple[Tuple[int, ...], Tuple[int, ...]]: ...

    @abstractmethod
    def _quadratic(self, matrix: np.ndarray) -> Poly:
        """The polynomial V^H M V of a Hermitian matrix."""

    @abstractmethod
    def _constant(self, value: float) -> Poly: ...

    @abstractmethod
    def _lift(self, poly: Poly) -> LinearForm: ...

    @abstractmethod
    def _moment_block(self, basis: list, name: str, clique: int) -> SymbolicBlock: ...

    @abstractmethod
    def _localizing_block(self, poly: Poly, basis: list, name: str, clique: int) -> SymbolicBlock: ...

    @abstractmethod
    def _bound(self, var_id: int, v_max: np.ndarray) -> Optional[float]: ...

    def _finish(self) -> None:
        """Hierarchy-specific additions after the shared constraints."""

    # Shared assembly

    def build(self) -> Relaxation:
        """Assemble every block and constraint and return the relaxation."""
        self._add_moment_blocks()
        self._add_injection_forms()
        self._add_bus_constraints()
        self._add_flow_constraints()
        self._add_objective()
        self.relaxation.constraints.append(
            LinearConstraint({0: 1.0, CONSTANT_TERM: -1.0}, "==", "normalization")
        )
        self._finish()
        if self.options.variable_bounds:
            self._add_bounds()
        census = self.relaxation.census()
        logger.debug(
            f"Assembled {self.kind} relaxation at orders {list(self.orders)}: {census.num_variables} variables, "
            f"blocks {census.num_blocks}, max block {census.max_block_dim}."
        )
        return self.relaxation

    def _add_moment_blocks(self) -> None:
        for c, clique in enumerate(self.structure.cliques):
            basis = self._basis(clique, self.clique_orders[c])
            block = self._moment_block(basis, f"moment[clique {c}]", c)
            rows, variables = self._first_order(basis)
            self.relaxation.first_order.append(FirstOrderBlock(c, len(self.relaxation.blocks), rows, variables))
            self.relaxation.blocks.append(block)

    def _add_injection_forms(self) -> None:
        for k in range(self.case.n):
            p_form = self._lift(self._quadratic(self.matrices.injection_p[k]))
            q_form = self._lift(self._quadratic(self.matrices.injection_q[k]))
            self.relaxation.injection_forms.append((p_form, q_form))

    def _bus_clique(self, k: int) -> int:
        found = smallest_clique_containing(self.structure, [k, *self.case.neighbors(k)])
        if found is None:
            found = smallest_clique_containing(self.structure, [k])
        if found is None:
            raise ValueError(f"Bus {k} belongs to no clique.")
        return found

    def _two_sided(self, f: Poly, lo: float, hi: float, degree_half: int, order: int, clique: int, label: str) -> None:
        """lo <= f <= hi as two constraints; equal limits give exactly opposed ones."""
        g_lo = f - lo
        g_hi = -g_lo + (hi - lo)
        self._constraint(g_lo, degree_half, order, clique, f"{label}_min")
        self._constraint(g_hi, degree_half, order, clique, f"{label}_max")

    def _constraint(self, g: Poly, degree_half: int, order: int, clique: int, name: str) -> None:
        """Localizing constraint of g >= 0 at `order`, scalar when the localizing order is zero."""
        local_order = order - degree_half
        if local_order < 0:
            raise OrderTooLowError(f"Constraint {name} needs order {degree_half}, got {order}.")
        if local_order == 0:
            self.relaxation.constraints.append(LinearConstraint(self._lift(g), ">=", name))
            return
        basis = self._basis(self.structure.cliques[clique], local_order)
        self.relaxation.blocks.append(self._localizing_block(g, basis, name, clique))

    def _add_bus_constraints(self) -> None:
        generation = aggregate_bus_generation(self.case)
        p_load, q_load = self.case.p_load, self.case.q_load
        for k, bus in enumerate(self.case.buses):
            clique = self._bus_clique(k)
            order = self.orders[k]
            f_p = self._quadratic(self.matrices.injection_p[k])
            f_q = self._quadratic(self.matrices.injection_q[k])
            unit = np.zeros((self.case.n, self.case.n))
            unit[k, k] = 1.0
            f_v = self._quadratic(unit)
            self._two_sided(
                f_p, generation.p_min[k] - p_load[k], generation.p_max[k] - p_load[k], 1, order, clique, f"P[bus {k}]"
            )
            self._two_sided(
                f_q, generation.q_min[k] - q_load[k], generation.q_max[k] - q_load[k], 1, order, clique, f"Q[bus {k}]"
            )
            self._two_sided(f_v, bus.v_min**2, bus.v_max**2, 1, order, clique, f"V[bus {k}]")

    def _add_flow_constraints(self) -> None:
        for flow in self.matrices.flows:
            if flow.s_max <= 0:
                continue
            order = max(self.orders[flow.bus], self.orders[flow.other])
            clique = smallest_clique_containing(self.structure, [flow.bus, flow.other])
            if clique is None:
                raise ValueError(f"No clique contains line {flow.line} ({flow.bus}, {flow.other}).")
            form = self.options.resolved_cost_form(order)
            label = f"S[line {flow.line} at bus {flow.bus}]"
            f_p = self._quadratic(flow.p_matrix)
            f_q = self._quadratic(flow.q_matrix)
            if form == "direct" and order < 2:
                raise OrderTooLowError(f"Direct flow limit {label} needs order 2, got {order}.")
            if form != "direct":
                self.relaxation.blocks.append(
                    schur_flow_block(self._lift(f_p), self._lift(f_q), flow.s_max, f"schur_{label}", clique)
                )
            if form in ("direct", "both") and order >= 2:
                g = self._constant(flow.s_max**2) - f_p * f_p - f_q * f_q
                self._constraint(g, 2, order, clique, label)

    def _term_order(self, term: CostTerm) -> Tuple[int, int]:
        if term.bus is None:
            return max(self.orders), 0
        return self.orders[term.bus], self._bus_clique(term.bus)

    def _add_objective(self) -> None:
        objective = objective_polynomial(self.case, self.options.objective, self.matrices)
        total: List[Tuple[float, LinearForm]] = []
        for term in objective.terms:
            g = self._quadratic(term.matrix) + term.offset
            lifted = self._lift(g)
            if term.c2 == 0:
                total.append((term.c1, lifted))
                total.append((1.0, {CONSTANT_TERM: term.c0}))
                continue
            order, clique = self._term_order(term)
            form = self.options.resolved_cost_form(order)
            label = f"cost[bus {term.bus}]"
            if form in ("direct", "both") and order < 2:
                raise OrderTooLowError(f"Direct quartic cost {label} needs order 2, got {order}.")
            f_c = g * g * term.c2 + g * term.c1 + term.c0
            if form == "direct":
                total.append((1.0, self._lift(f_c)))
                continue
            t_id = self.idx.add_auxiliary(f"t[bus {term.bus}]")
            self.relaxation.aux[t_id] = _cost_evaluator(objective, term)
            self.relaxation.blocks.append(
                schur_cost_block(t_id, lifted, term.c2, term.c1, term.c0, f"schur_{label}", clique)
            )
            total.append((1.0, {t_id: 1.0}))
            if form == "both":
                self.relaxation.constraints.append(
                    LinearConstraint(add_forms((1.0, {t_id: 1.0}), (-1.0, self._lift(f_c))), ">=", f"direct_{label}")
                )
        self.relaxation.objective = add_forms(*total)  # type: ignore[assignment]

    def _add_bounds(self) -> None:
        v_max = self.case.v_max
        for var_id in self.idx.moment_ids():
            bound = self._bound(var_id, v_max)
            if bound is None:
                continue
            self.relaxation.lower[var_id] = -bound
            self.relaxation.upper[var_id] = bound


def _cost_evaluator(objective: ObjectivePolynomial, term: CostTerm):
    single = ObjectivePolynomial(objective.mode, objective.num_buses, (term,))
    return single.evaluate
