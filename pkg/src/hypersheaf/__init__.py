"""Sheaf Laplacians on the symmetric simplicial set induced by a hypergraph.

The pipeline: parse a hypergraph, build the skeleton of its induced
symmetric simplicial set (ordered tuples inside each hyperedge, tagged by
the hyperedge they come from), put a cellular sheaf on it, assemble degree-k
sheaf Laplacians, and run learned sheaf diffusion for node classification.
"""

from .hypergraph import (
    Hypergraph,
    HypergraphError,
    clique_expansion_multigraph,
    labeled_equal,
    parse_hypergraph,
    serialize_hypergraph,
)
from .simplicial import (
    Simplex,
    Skeleton,
    SkeletonError,
    apply_map,
    build_skeleton,
    facet,
    lower_adjacency,
    maximal_classes,
    reconstruct_hypergraph,
    upper_adjacency,
)
from .sheaf import (
    CellularSheaf,
    GraphSheaf,
    SheafError,
    check_compatibility,
    identity_graph_sheaf,
    identity_sheaf,
    induce_from_graph_sheaf,
    load_sheaf,
    random_graph_sheaf,
    random_sheaf,
    save_sheaf,
)
from .laplacian import (
    BlockSparseMatrix,
    Cochain,
    LaplacianError,
    assemble_diagonal,
    assemble_laplacian,
    degree0_direct,
    dirichlet_energy,
    graph_sheaf_laplacian,
    normalize,
    spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "Hypergraph",
    "HypergraphError",
    "parse_hypergraph",
    "serialize_hypergraph",
    "labeled_equal",
    "clique_expansion_multigraph",
    "Simplex",
    "Skeleton",
    "SkeletonError",
    "build_skeleton",
    "apply_map",
    "facet",
    "upper_adjacency",
    "lower_adjacency",
    "maximal_classes",
    "reconstruct_hypergraph",
    "CellularSheaf",
    "GraphSheaf",
    "SheafError",
    "identity_sheaf",
    "random_sheaf",
    "identity_graph_sheaf",
    "random_graph_sheaf",
    "induce_from_graph_sheaf",
    "check_compatibility",
    "save_sheaf",
    "load_sheaf",
    "BlockSparseMatrix",
    "Cochain",
    "LaplacianError",
    "assemble_laplacian",
    "assemble_diagonal",
    "degree0_direct",
    "normalize",
    "graph_sheaf_laplacian",
    "spectrum",
    "dirichlet_energy",
]
