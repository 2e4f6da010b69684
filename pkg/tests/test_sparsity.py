# Standard Library Imports
from itertools import combinations

# Third-Party Library Imports
import networkx as nx
import pytest

# Local Application Imports
from src.common import real_basis_size
from src.polynomial import VariableLayout, basis_real
from src.relaxation import sparsity_structure
from src.sparsity import (
    ChordalStructure,
    build_graph,
    chordal_extend,
    clique_bases,
    coupling_graph,
    has_zero_fill,
    maximum_cardinality_ordering,
    merge_cliques,
    predicted_block_sizes,
    smallest_clique_containing,
)


def assert_valid_structure(graph: nx.Graph, structure: ChordalStructure) -> None:
    assert has_zero_fill(structure.graph, structure.ordering)
    assert nx.is_chordal(structure.graph)
    for a, b in graph.edges():
        assert structure.cliques_containing([a, b]), f"edge ({a}, {b}) is in no clique"
    for a, b in combinations(structure.cliques, 2):
        assert not set(a) <= set(b) and not set(b) <= set(a)
    tree = nx.Graph()
    tree.add_nodes_from(range(len(structure.cliques)))
    tree.add_edges_from((e.left, e.right) for e in structure.tree_edges)
    assert nx.is_forest(tree)
    for i, j in combinations(range(len(structure.cliques)), 2):
        shared = set(structure.cliques[i]) & set(structure.cliques[j])
        if not shared:
            continue
        for step in nx.shortest_path(tree, i, j):
            assert shared <= set(structure.cliques[step])


def test_path_is_already_chordal():
    structure = chordal_extend(nx.path_graph(4))
    assert structure.fill_edges == ()
    assert structure.cliques == ((0, 1), (1, 2), (2, 3))
    assert len(structure.tree_edges) == 2


def test_four_cycle_gets_one_chord():
    structure = chordal_extend(nx.cycle_graph(4))
    assert len(structure.fill_edges) == 1
    assert len(structure.cliques) == 2
    assert all(len(clique) == 3 for clique in structure.cliques)


def test_complete_graph_is_one_clique():
    structure = chordal_extend(nx.complete_graph(5))
    assert structure.cliques == ((0, 1, 2, 3, 4),)
    assert structure.fill_edges == ()
    assert structure.tree_edges == ()


def test_two_bus_network_graph(case2):
    structure = chordal_extend(build_graph(case2))
    assert structure.cliques == ((0, 1),)


def test_bundled_case_structures(bundled_cases):
    for case in bundled_cases:
        for graph in (build_graph(case), coupling_graph(case)):
            structure = chordal_extend(graph)
            assert_valid_structure(graph, structure)
            assert len(structure.cliques) <= max(case.n - 1, 1)


def test_coupling_graph_holds_every_injection(case14):
    structure = chordal_extend(coupling_graph(case14))
    for k in range(case14.n):
        assert smallest_clique_containing(structure, [k, *case14.neighbors(k)]) is not None


def test_coupling_graph_only_closes_line_neighbourhoods(case14):
    base = build_graph(case14)
    graph = coupling_graph(case14)
    expected = set(map(frozenset, base.edges()))
    for k in base.nodes:
        expected |= {frozenset(pair) for pair in combinations(base.neighbors(k), 2)}
    assert set(map(frozenset, graph.edges())) == expected
    assert graph.number_of_edges() < case14.n * (case14.n - 1) // 2


def test_default_structure_keeps_case14_sparse(case14):
    structure = sparsity_structure(case14)
    assert len(structure.cliques) > 1
    assert structure.max_clique_size < case14.n


@pytest.mark.parametrize("seed", range(8))
def test_random_graphs(seed):
    graph = nx.gnm_random_graph(15, 25, seed=seed)
    structure = chordal_extend(graph)
    assert_valid_structure(graph, structure)
    assert all(structure.graph.has_edge(a, b) for a, b in graph.edges())


def test_maximum_cardinality_ordering_is_perfect_on_chordal_graphs():
    structure = chordal_extend(nx.gnm_random_graph(12, 20, seed=3))
    assert has_zero_fill(structure.graph, maximum_cardinality_ordering(structure.graph))


def test_merge_collapses_a_path():
    graph = nx.path_graph(4)
    merged = merge_cliques(chordal_extend(graph))
    assert merged.cliques == ((0, 1, 2, 3),)
    assert_valid_structure(graph, merged)


def test_merge_respects_rule():
    graph = nx.path_graph(4)
    structure = chordal_extend(graph)
    assert merge_cliques(structure, rule=lambda a, b: False).cliques == structure.cliques


def test_first_order_bases_cover_every_variable(case9):
    structure = chordal_extend(build_graph(case9))
    layout = VariableLayout(case9.n, case9.ref_bus)
    bases = clique_bases(structure, [1] * case9.n, "real", layout)
    union = {monomial for basis in bases for monomial in basis}
    assert union == set(basis_real(case9.n, 1))
    for clique, basis in zip(structure.cliques, bases):
        expected = 1 + 2 * len(clique) - (1 if case9.ref_bus in clique else 0)
        assert len(basis) == expected


def test_complex_basis_uses_clique_order(case2):
    structure = chordal_extend(build_graph(case2))
    (basis,) = clique_bases(structure, [2, 1], "complex")
    assert len(basis) == 6
    assert all(beta == (0, 0) for _, beta in basis)


def test_orders_below_one_rejected(case2):
    structure = chordal_extend(build_graph(case2))
    with pytest.raises(ValueError):
        clique_bases(structure, [0, 1], "complex")
    with pytest.raises(ValueError):
        clique_bases(structure, [1, 1], "real")


def test_predicted_block_sizes(case2):
    structure = chordal_extend(build_graph(case2))
    assert predicted_block_sizes(structure, 2, "real", case2.ref_bus) == [real_basis_size(2, 2)]
    assert predicted_block_sizes(structure, 2, "real", case2.ref_bus) == [10]
    assert predicted_block_sizes(structure, 2, "complex", case2.ref_bus) == [6]
