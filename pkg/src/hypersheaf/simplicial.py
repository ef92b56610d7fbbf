"""The induced symmetric simplicial set of a hypergraph.

For each hyperedge e, every ordered (n+1)-tuple of members of its label is
an n-simplex tagged with e; constant tuples are identified across tags and
re-tagged with their vertex.  Only nondegenerate simplices (injective
tuples) are materialized: cochain spaces and Laplacians are defined over
them, and each nondegenerate 0-simplex [v]_v has exactly two nondegenerate
cofacets [v,w]_e and [w,v]_e per co-member w of each shared hyperedge.

A Skeleton enumerates the nondegenerate simplices up to a chosen dimension
in a canonical order (lexicographic by provenance index, then tuple), with
facet and cofacet tables for adjacency sweeps.
"""

from __future__ import annotations

from itertools import permutations
from typing import NamedTuple, Sequence

import numpy as np

from .hypergraph import Hypergraph

# Provenance marker for vertex-tagged (constant-tuple) simplices.
VERTEX = -1

# Default ceiling on the number of materialized simplices.  Nondegenerate
# n-simplex counts grow like falling factorials of hyperedge sizes, so deep
# skeletons over large hyperedges explode quickly.
DEFAULT_CAP = 10**8


class SkeletonError(ValueError):
    """Invalid skeleton request: bad dimension, blown count guard, shallow build."""


class Simplex(NamedTuple):
    """Provenance-tagged ordered tuple of node indices.

    ``edge`` is a hyperedge index, or VERTEX for the identified constant
    tuples [v,...,v]_v.  A simplex is nondegenerate iff its tuple entries
    are pairwise distinct.
    """

    edge: int
    nodes: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.nodes) - 1

    @property
    def is_degenerate(self) -> bool:
        return len(set(self.nodes)) != len(self.nodes)


def make_simplex(edge: int, nodes: Sequence[int]) -> Simplex:
    """Canonical form: constant tuples are re-tagged with vertex provenance."""
    tup = tuple(nodes)
    if not tup:
        raise SkeletonError("simplex tuple may not be empty")
    if all(v == tup[0] for v in tup):
        return Simplex(VERTEX, tup)
    return Simplex(edge, tup)


def apply_map(s: Simplex, mu: Sequence[int]) -> Simplex:
    """Apply the structure map induced by mu: [m] -> [n] to an n-simplex.

    mu is given as the index sequence (mu(0), ..., mu(m)); the result is the
    simplex with tuple (nodes[mu(0)], ..., nodes[mu(m)]) under the same tag,
    canonicalized.  Applying nu then mu equals applying the composite
    nu o mu, which is the defining identity of the structure.
    """
    n = s.dim
    if len(mu) == 0:
        raise SkeletonError("index sequence may not be empty")
    for i in mu:
        if not 0 <= i <= n:
            raise SkeletonError(f"index {i} out of range for a {n}-simplex")
    return make_simplex(s.edge, tuple(s.nodes[i] for i in mu))


def facet(s: Simplex, i: int) -> tuple[Simplex, int]:
    """The i-th facet d_i(s) with its signed incidence (-1)^i.

    Requires dim >= 1; the facet drops position i from the tuple.
    """
    n = s.dim
    if n < 1:
        raise SkeletonError("0-simplices have no facets")
    if not 0 <= i <= n:
        raise SkeletonError(f"facet index {i} out of range for a {n}-simplex")
    sub = make_simplex(s.edge, s.nodes[:i] + s.nodes[i + 1 :])
    return sub, (-1) ** i


def predicted_simplex_count(h: Hypergraph, max_degree: int) -> int:
    """Number of nondegenerate simplices of dimension <= max_degree.

    |dim 0| = |V|; for n >= 1 each hyperedge of size s contributes the
    falling factorial s(s-1)...(s-n).
    """
    total = h.n_nodes
    sizes = [len(label) for label in h.edges]
    for n in range(1, max_degree + 1):
        for s in sizes:
            if s >= n + 1:
                c = 1
                for t in range(n + 1):
                    c *= s - t
                total += c
    return total


class Skeleton:
    """Indexed nondegenerate simplices of dimensions 0..max_degree.

    Per dimension n the simplices sit in canonical order (vertex order for
    n = 0; lexicographic by (hyperedge index, tuple) for n >= 1), giving
    deterministic matrix layouts.  ``facet_table[n][i, p]`` is the index in
    dimension n-1 of the p-th facet of simplex i; ``cofacet_lists[n][j]``
    lists the (cofacet index, position) incidences of simplex j in
    dimension n+1.
    """

    def __init__(self, h: Hypergraph, max_degree: int, cap: int = DEFAULT_CAP):
        if max_degree < 0:
            raise SkeletonError("max_degree must be >= 0")
        predicted = predicted_simplex_count(h, max_degree)
        if predicted > cap:
            raise SkeletonError(
                f"predicted simplex count {predicted} exceeds cap {cap}; "
                "lower max_degree or raise the cap"
            )
        self.hypergraph = h
        self.max_degree = max_degree

        self.simplices: list[list[Simplex]] = []
        self.index: list[dict[Simplex, int]] = []

        zero = [Simplex(VERTEX, (v,)) for v in range(h.n_nodes)]
        self.simplices.append(zero)
        self.index.append({s: i for i, s in enumerate(zero)})

        for n in range(1, max_degree + 1):
            level: list[Simplex] = []
            # Edge-major enumeration of lexicographic permutations is already
            # in canonical (edge, tuple) order.
            for ei, label in enumerate(h.edges):
                members = sorted(label)
                if len(members) >= n + 1:
                    level.extend(Simplex(ei, t) for t in permutations(members, n + 1))
            self.simplices.append(level)
            self.index.append({s: i for i, s in enumerate(level)})

        self.facet_table: list[np.ndarray | None] = [None]
        for n in range(1, max_degree + 1):
            level = self.simplices[n]
            table = np.empty((len(level), n + 1), dtype=np.int64)
            lower = self.index[n - 1]
            for i, s in enumerate(level):
                for p in range(n + 1):
                    table[i, p] = lower[facet(s, p)[0]]
            self.facet_table.append(table)

        self.cofacet_lists: list[list[list[tuple[int, int]]]] = []
        for n in range(max_degree):
            self.cofacet_lists.append([[] for _ in self.simplices[n]])
        for n in range(1, max_degree + 1):
            table = self.facet_table[n]
            for i in range(table.shape[0]):
                for p in range(n + 1):
                    self.cofacet_lists[n - 1][table[i, p]].append((i, p))

    def count(self, n: int) -> int:
        self._check_dim(n)
        return len(self.simplices[n])

    def simplex(self, n: int, i: int) -> Simplex:
        self._check_dim(n)
        return self.simplices[n][i]

    def index_of(self, s: Simplex) -> int:
        self._check_dim(s.dim)
        return self.index[s.dim][s]

    def _check_dim(self, n: int) -> None:
        if not 0 <= n <= self.max_degree:
            raise SkeletonError(f"dimension {n} outside skeleton range 0..{self.max_degree}")

    def dump_lines(self) -> list[str]:
        """Debug dump, one line per simplex: "dim n: <index> <provenance> (<tuple>)"."""
        h = self.hypergraph
        out = []
        for n in range(self.max_degree + 1):
            for i, s in enumerate(self.simplices[n]):
                prov = h.nodes[s.nodes[0]] if s.edge == VERTEX else h.edge_ids[s.edge]
                tup = ", ".join(str(h.nodes[v]) for v in s.nodes)
                out.append(f"dim {n}: {i} {prov} ({tup})")
        return out


def build_skeleton(h: Hypergraph, max_degree: int = 1, cap: int = DEFAULT_CAP) -> Skeleton:
    """Enumerate nondegenerate simplices of dimension <= max_degree with tables.

    Refuses (SkeletonError) when the predicted simplex count exceeds cap.
    """
    return Skeleton(h, max_degree, cap=cap)


IncidenceEntry = tuple[int, int, int, tuple[int, int]]


def upper_adjacency(sk: Skeleton, k: int) -> list[IncidenceEntry]:
    """Incidence entries (sigma, sigma', tau, (sign, sign')) over common cofacets.

    One entry per ordered pair of facet positions of every nondegenerate
    (k+1)-simplex tau, so sigma = sigma' (self-adjacency through tau) is
    included.  Signs are the signed incidences (-1)^position.
    """
    if k < 0 or k + 1 > sk.max_degree:
        raise SkeletonError(f"upper adjacency at degree {k} needs skeleton depth {k + 1}")
    table = sk.facet_table[k + 1]
    entries: list[IncidenceEntry] = []
    for t in range(table.shape[0]):
        row = table[t]
        for i in range(k + 2):
            si = (-1) ** i
            for j in range(k + 2):
                entries.append((int(row[i]), int(row[j]), t, (si, (-1) ** j)))
    return entries


def lower_adjacency(sk: Skeleton, k: int) -> list[IncidenceEntry]:
    """Incidence entries (sigma, sigma'', mu, (sign, sign'')) over common facets.

    Defined for 1 <= k <= max_degree.  At k = 1 the common facets are
    vertex-tagged 0-simplices, which is what couples simplices originating
    from different hyperedges.
    """
    if not 1 <= k <= sk.max_degree:
        raise SkeletonError(f"lower adjacency needs 1 <= k <= {sk.max_degree}, got {k}")
    table = sk.facet_table[k]
    incident: list[list[tuple[int, int]]] = [[] for _ in sk.simplices[k - 1]]
    for i in range(table.shape[0]):
        for p in range(k + 1):
            incident[table[i, p]].append((i, p))
    entries: list[IncidenceEntry] = []
    for mu, cofs in enumerate(incident):
        for a, pa in cofs:
            sa = (-1) ** pa
            for b, pb in cofs:
                entries.append((a, b, mu, (sa, (-1) ** pb)))
    return entries


def maximal_classes(sk: Skeleton) -> list[list[int]]:
    """Permutation classes of maximal nondegenerate simplices, one per hyperedge.

    The class of hyperedge e collects every injective full-length tuple on
    its label (all tagged e), i.e. the orbit under permuting positions; its
    size is (dimension+1)!.  Requires the skeleton to reach max dimension.
    """
    h = sk.hypergraph
    if h.max_dimension > sk.max_degree:
        raise SkeletonError(
            f"skeleton depth {sk.max_degree} below maximal hyperedge dimension {h.max_dimension}"
        )
    classes: list[list[int]] = [[] for _ in range(h.n_edges)]
    for ei, label in enumerate(h.edges):
        n = len(label) - 1
        idx = sk.index[n]
        for t in permutations(sorted(label)):
            classes[ei].append(idx[Simplex(ei, t)])
    return classes


def reconstruct_hypergraph(sk: Skeleton) -> Hypergraph:
    """Rebuild a hypergraph from skeleton data alone.

    Nodes are the 0-simplices; each class of maximal nondegenerate simplices
    becomes one hyperedge labeled with the underlying node set.  The result
    is labeled-equal to the source hypergraph, with parallel hyperedges
    recovered at full multiplicity because classes keep their tags.
    """
    h = sk.hypergraph
    nodes = tuple(h.nodes[s.nodes[0]] for s in sk.simplices[0])
    classes = maximal_classes(sk)
    edges = []
    for ei, members in enumerate(classes):
        n = len(h.edges[ei]) - 1
        rep = sk.simplex(n, members[0])
        edges.append(frozenset(rep.nodes))
    edge_ids = tuple(f"e{k}" for k in range(len(edges)))
    return Hypergraph(nodes, edge_ids, tuple(edges))
