"""Shared fixtures: small named hypergraphs and a seeded random generator."""

import numpy as np
import pytest

from hypersheaf import Hypergraph, parse_hypergraph

# Two overlapping hyperedges of sizes 4 and 3 on five nodes.
TWO_EDGE_TEXT = "v0 v1 v2 v3\nv2 v3 v4\n"

# Three size-3 hyperedges on four nodes; no size-2 hyperedge exists, so the
# hyperedges themselves are pairwise non-adjacent.
TRIANGLES_TEXT = "v0 v1 v2\nv0 v2 v3\nv0 v1 v3\n"

SINGLE_EDGE_TEXT = "a b\n"


@pytest.fixture
def two_edge_hypergraph() -> Hypergraph:
    return parse_hypergraph(TWO_EDGE_TEXT)


@pytest.fixture
def triangles_hypergraph() -> Hypergraph:
    return parse_hypergraph(TRIANGLES_TEXT)


@pytest.fixture
def single_edge_graph() -> Hypergraph:
    return parse_hypergraph(SINGLE_EDGE_TEXT)


def random_hypergraph(
    rng: np.random.Generator,
    max_nodes: int = 8,
    max_edges: int = 5,
    size_range: tuple[int, int] = (2, 5),
    min_edges: int = 0,
) -> Hypergraph:
    """Random hypergraph; sampling with replacement permits parallel edges."""
    n = int(rng.integers(2, max_nodes + 1))
    m = int(rng.integers(min_edges, max_edges + 1))
    edges = []
    for _ in range(m):
        size = int(rng.integers(size_range[0], min(size_range[1], n) + 1))
        members = rng.choice(n, size=size, replace=False)
        edges.append(frozenset(int(v) for v in members))
    return Hypergraph(
        tuple(f"v{i}" for i in range(n)),
        tuple(f"e{k}" for k in range(m)),
        tuple(edges),
    )


def random_graph(rng: np.random.Generator, max_nodes: int = 12, edge_prob: float = 0.4) -> Hypergraph:
    """Erdos-Renyi style graph as a hypergraph with all labels of size 2."""
    n = int(rng.integers(2, max_nodes + 1))
    edges = []
    for v in range(n):
        for w in range(v + 1, n):
            if rng.random() < edge_prob:
                edges.append(frozenset((v, w)))
    return Hypergraph(
        tuple(f"v{i}" for i in range(n)),
        tuple(f"e{k}" for k in range(len(edges))),
        tuple(edges),
    )
