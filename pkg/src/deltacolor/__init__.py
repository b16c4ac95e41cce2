"""Distributed Delta-coloring under per-edge bandwidth limits."""

from .graphs import (
    Graph,
    GeneratorSpec,
    PlantedInfo,
    generate,
    count_non_edges,
    max_bipartite_matching,
    validate_delta_colorable,
    check_proper_coloring,
    read_graph,
    write_graph,
    read_coloring,
    write_coloring,
)

__all__ = [
    "Graph",
    "GeneratorSpec",
    "PlantedInfo",
    "generate",
    "count_non_edges",
    "max_bipartite_matching",
    "validate_delta_colorable",
    "check_proper_coloring",
    "read_graph",
    "write_graph",
    "read_coloring",
    "write_coloring",
]
