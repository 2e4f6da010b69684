from .chordal import (
    ChordalStructure,
    Clique,
    CliqueTreeEdge,
    build_graph,
    chordal_extend,
    clique_bases,
    clique_order,
    coupling_graph,
    default_merge_rule,
    has_zero_fill,
    maximum_cardinality_ordering,
    merge_cliques,
    minimum_degree_ordering,
    predicted_block_sizes,
    smallest_clique_containing,
)

__all__ = [
    "ChordalStructure",
    "Clique",
    "CliqueTreeEdge",
    "build_graph",
    "chordal_extend",
    "clique_bases",
    "clique_order",
    "coupling_graph",
    "default_merge_rule",
    "has_zero_fill",
    "maximum_cardinality_ordering",
    "merge_cliques",
    "minimum_degree_ordering",
    "predicted_block_sizes",
    "smallest_clique_containing",
]
