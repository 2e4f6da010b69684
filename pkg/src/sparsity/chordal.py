# Standard Library Imports
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple, Union

# Third-Party Library Imports
import networkx as nx

# Local Application Imports
from src.common import ComplexMonomial, Hierarchy, RealMonomial, complex_basis_size, logger, real_basis_size
from src.network import NetworkCase
from src.polynomial import VariableLayout, monomial_basis

Clique = Tuple[int, ...]
MergeRule = Callable[[Clique, Clique], bool]


class CliqueTreeEdge(NamedTuple):
    left: int
    right: int
    separator: Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class ChordalStructure:
    """
    Chordal extension of a sparsity graph with its maximal cliques and clique tree.

    Attributes:
        ordering (Tuple[int, ...]): Perfect elimination ordering of `graph`.
        fill_edges (Tuple[Tuple[int, int], ...]): Edges added to the input graph, as (low, high) pairs.
        cliques (Tuple[Clique, ...]): Maximal cliques as sorted bus tuples, sorted lexicographically.
        tree_edges (Tuple[CliqueTreeEdge, ...]): Clique tree (a forest for disconnected graphs).
        graph (nx.Graph): The chordal extended graph.
    """

    ordering: Tuple[int, ...]
    fill_edges: Tuple[Tuple[int, int], ...]
    cliques: Tuple[Clique, ...]
    tree_edges: Tuple[CliqueTreeEdge, ...]
    graph: nx.Graph

    @property
    def max_clique_size(self) -> int:
        return max((len(c) for c in self.cliques), default=0)

    def cliques_containing(self, buses: Iterable[int]) -> List[int]:
        wanted = set(buses)
        return [i for i, clique in enumerate(self.cliques) if wanted.issubset(clique)]

    def tree_neighbors(self, clique_id: int) -> List[int]:
        found = []
        for edge in self.tree_edges:
            if edge.left == clique_id:
                found.append(edge.right)
            elif edge.right == clique_id:
                found.append(edge.left)
        return sorted(found)


def build_graph(case: NetworkCase) -> nx.Graph:
    """One vertex per bus and one edge per line; parallel lines collapse to one edge."""
    graph = nx.Graph()
    graph.add_nodes_from(range(case.n))
    graph.add_edges_from((line.from_bus, line.to_bus) for line in case.lines)
    return graph


def coupling_graph(case: NetworkCase) -> nx.Graph:
    """
    Network graph plus the edges the bus constraints couple.

    The injection at bus k involves V_k and every neighbour of k, so {k} and its neighbours are made
    pairwise adjacent. Every bus constraint then lies inside a single maximal clique of any chordal
    extension.
    """
    base = build_graph(case)
    graph = base.copy()
    for k in range(case.n):
        around = sorted(base.neighbors(k))
        for i, a in enumerate(around):
            for b in around[i + 1 :]:
                graph.add_edge(a, b)
    return graph


def minimum_degree_ordering(graph: nx.Graph) -> Tuple[List[int], List[Tuple[int, int]]]:
    """
    Greedy minimum-degree elimination with symbolic fill.

    Ties are broken by the lowest vertex index, so the result is deterministic.

    Returns:
        Tuple[List[int], List[Tuple[int, int]]]: Elimination ordering and fill edges.
    """
    work: Dict[int, Set[int]] = {v: set(graph.neighbors(v)) for v in graph.nodes}
    ordering: List[int] = []
    fill: List[Tuple[int, int]] = []
    while work:
        v = min(work, key=lambda u: (len(work[u]), u))
        around = sorted(work[v])
        for i, a in enumerate(around):
            for b in around[i + 1 :]:
                if b not in work[a]:
                    work[a].add(b)
                    work[b].add(a)
                    fill.append((a, b))
        for u in around:
            work[u].discard(v)
        del work[v]
        ordering.append(v)
    return ordering, sorted(fill)


def maximum_cardinality_ordering(graph: nx.Graph) -> List[int]:
    """Reverse maximum cardinality search order, a perfect elimination ordering for chordal graphs."""
    weight = {v: 0 for v in graph.nodes}
    visited: List[int] = []
    remaining = set(graph.nodes)
    while remaining:
        v = max(remaining, key=lambda u: (weight[u], -u))
        remaining.remove(v)
        visited.append(v)
        for u in graph.neighbors(v):
            if u in remaining:
                weight[u] += 1
    return visited[::-1]


def has_zero_fill(graph: nx.Graph, ordering: Sequence[int]) -> bool:
    """True if eliminating `ordering` adds no edge, i.e. the ordering is a perfect elimination ordering."""
    position = {v: i for i, v in enumerate(ordering)}
    for v in ordering:
        later = [u for u in graph.neighbors(v) if position[u] > position[v]]
        for i, a in enumerate(later):
            for b in later[i + 1 :]:
                if not graph.has_edge(a, b):
                    return False
    return True


def _maximal_cliques(graph: nx.Graph, ordering: Sequence[int]) -> List[Clique]:
    position = {v: i for i, v in enumerate(ordering)}
    candidates: List[FrozenSet[int]] = []
    for v in ordering:
        candidates.append(frozenset([v, *(u for u in graph.neighbors(v) if position[u] > position[v])]))
    maximal = {c for c in candidates if not any(c < other for other in candidates)}
    return sorted(tuple(sorted(c)) for c in maximal)


def _clique_tree(cliques: Sequence[Clique]) -> List[CliqueTreeEdge]:
    clique_graph = nx.Graph()
    clique_graph.add_nodes_from(range(len(cliques)))
    for i, a in enumerate(cliques):
        for j in range(i + 1, len(cliques)):
            shared = set(a) & set(cliques[j])
            if shared:
                clique_graph.add_edge(i, j, weight=len(shared))
    tree = nx.maximum_spanning_tree(clique_graph, weight="weight")
    edges = []
    for i, j in tree.edges():
        left, right = min(i, j), max(i, j)
        separator = tuple(sorted(set(cliques[left]) & set(cliques[right])))
        edges.append(CliqueTreeEdge(left, right, separator))
    return sorted(edges)


def _structure(graph: nx.Graph, base_edges: Set[Tuple[int, int]], ordering: Sequence[int]) -> ChordalStructure:
    cliques = _maximal_cliques(graph, ordering)
    fill = sorted(
        (min(a, b), max(a, b)) for a, b in graph.edges() if (min(a, b), max(a, b)) not in base_edges
    )
    return ChordalStructure(
        ordering=tuple(ordering),
        fill_edges=tuple(fill),
        cliques=tuple(cliques),
        tree_edges=tuple(_clique_tree(cliques)),
        graph=graph,
    )


def chordal_extend(graph: nx.Graph) -> ChordalStructure:
    """
    Chordal extension by minimum-degree elimination, with maximal cliques and a clique tree.

    The clique tree is a maximum-weight spanning tree of the clique intersection graph, which satisfies the
    running intersection property for chordal graphs.

    Args:
        graph (nx.Graph): Sparsity graph over bus indices.

    Returns:
        ChordalStructure: Extension, cliques and tree.
    """
    ordering, fill = minimum_degree_ordering(graph)
    extended = nx.Graph(graph)
    extended.add_edges_from(fill)
    base_edges = {(min(a, b), max(a, b)) for a, b in graph.edges()}
    structure = _structure(extended, base_edges, ordering)
    logger.debug(
        f"Chordal extension: {len(structure.cliques)} cliques, max size {structure.max_clique_size}, "
        f"{len(structure.fill_edges)} fill edges."
    )
    return structure


def default_merge_rule(a: Clique, b: Clique) -> bool:
    return len(set(a) | set(b)) <= max(len(a), len(b)) + 1


def merge_cliques(structure: ChordalStructure, rule: Optional[MergeRule] = None) -> ChordalStructure:
    """
    Merge clique-tree neighbours while `rule` accepts the pair.

    The merged clique is completed in the graph, which keeps it chordal; cliques, tree and elimination
    ordering are recomputed after every merge.

    Args:
        structure (ChordalStructure): Structure to coarsen.
        rule (Optional[MergeRule]): Acceptance test for a pair of adjacent cliques. Defaults to
            |a ∪ b| <= max(|a|, |b|) + 1.

    Returns:
        ChordalStructure: Structure with fewer or equally many cliques; fill edges include the merge edges.
    """
    rule = rule or default_merge_rule
    graph = nx.Graph(structure.graph)
    fill_set = set(structure.fill_edges)
    base_edges = {(min(a, b), max(a, b)) for a, b in graph.edges()} - fill_set
    current = structure
    while True:
        candidate = next(
            (e for e in current.tree_edges if rule(current.cliques[e.left], current.cliques[e.right])),
            None,
        )
        if candidate is None:
            return current
        merged = sorted(set(current.cliques[candidate.left]) | set(current.cliques[candidate.right]))
        for i, a in enumerate(merged):
            for b in merged[i + 1 :]:
                graph.add_edge(a, b)
        current = _structure(graph, base_edges, maximum_cardinality_ordering(graph))


def smallest_clique_containing(structure: ChordalStructure, buses: Iterable[int]) -> Optional[int]:
    """Id of the smallest clique containing all `buses`, ties to the lowest id; None if there is none."""
    found = structure.cliques_containing(buses)
    if not found:
        return None
    return min(found, key=lambda i: (len(structure.cliques[i]), i))


def clique_order(clique: Sequence[int], orders: Sequence[int]) -> int:
    return max(orders[k] for k in clique)


def clique_bases(
    structure: ChordalStructure,
    orders: Sequence[int],
    hierarchy: Hierarchy,
    layout: Optional[VariableLayout] = None,
) -> List[Union[List[RealMonomial], List[ComplexMonomial]]]:
    """
    Monomial basis of every clique at the clique order max_{i in c} gamma_i.

    Args:
        structure (ChordalStructure): Cliques over bus indices.
        orders (Sequence[int]): Per-bus relaxation orders, all >= 1.
        hierarchy (Hierarchy): "real" bases use V_d/V_q of the member buses (reference V_q excluded);
            "complex" bases use the member V_i.
        layout (Optional[VariableLayout]): Real variable layout, required for the real hierarchy.

    Returns:
        List of per-clique bases in graded lexicographic order.
    """
    if any(order < 1 for order in orders):
        raise ValueError("Relaxation orders must be at least 1.")
    n = len(orders)
    bases: List[Union[List[RealMonomial], List[ComplexMonomial]]] = []
    for clique in structure.cliques:
        gamma = clique_order(clique, orders)
        if hierarchy == "real":
            if layout is None:
                raise ValueError("The real hierarchy needs a variable layout.")
            bases.append(monomial_basis(layout.bus_variables(clique), gamma, layout.num_real_vars))
        else:
            zero = (0,) * n
            bases.append([(alpha, zero) for alpha in monomial_basis(clique, gamma, n)])
    return bases


def predicted_block_sizes(
    structure: ChordalStructure,
    order: int,
    hierarchy: Hierarchy,
    ref_bus: int,
) -> List[int]:
    """Moment block dimension of every clique at a uniform order (complex sizes before real embedding)."""
    if hierarchy == "real":
        return [real_basis_size(len(clique), order, ref_bus in clique) for clique in structure.cliques]
    return [complex_basis_size(len(clique), order) for clique in structure.cliques]

