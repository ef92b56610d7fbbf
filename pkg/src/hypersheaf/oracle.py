"""Brute-force reference implementations used by property tests.

Everything here recomputes structure straight from tuple definitions and
shares no assembly code with the main modules; results are deterministic
and guarded to small instances (oracles must never approximate).
"""

from __future__ import annotations

from itertools import permutations
from typing import Callable, NamedTuple

import numpy as np

from .hypergraph import Hypergraph
from .sheaf import CellularSheaf

MAX_ORACLE_NODES = 8
MAX_ORACLE_DEGREE = 2


class OracleError(ValueError):
    """Instance exceeds the hard size guard of a brute-force oracle."""


def _simplices(h: Hypergraph, n: int) -> list[tuple[int, tuple[int, ...]]]:
    # Canonical order contract: dimension 0 is the vertex list; higher
    # dimensions sort by (hyperedge index, tuple).
    if n == 0:
        return [(-1, (v,)) for v in range(h.n_nodes)]
    out = []
    for ei, label in enumerate(h.edges):
        for t in permutations(sorted(label), n + 1):
            out.append((ei, t))
    out.sort()
    return out


def _drop(key: tuple[int, tuple[int, ...]], i: int) -> tuple[int, tuple[int, ...]]:
    ei, t = key
    sub = t[:i] + t[i + 1 :]
    if all(v == sub[0] for v in sub):
        return (-1, sub)
    return (ei, sub)


def brute_laplacian(h: Hypergraph, sheaf: CellularSheaf, k: int) -> np.ndarray:
    """Dense degree-k Laplacian by literal enumeration of incidence triples.

    Sign convention: product of the two signed incidences (-1)^i (-1)^j.
    Restriction maps are read from the sheaf's arrays, addressed through an
    independently recomputed canonical ordering.
    """
    if h.n_nodes > MAX_ORACLE_NODES:
        raise OracleError(f"oracle limited to {MAX_ORACLE_NODES} nodes")
    if k > MAX_ORACLE_DEGREE:
        raise OracleError(f"oracle limited to degree {MAX_ORACLE_DEGREE}")
    if k < 0 or k > sheaf.degree:
        raise OracleError(f"degree {k} outside sheaf degree {sheaf.degree}")

    d = sheaf.stalk_dim
    sk_k = _simplices(h, k)
    index = {key: i for i, key in enumerate(sk_k)}
    n = len(sk_k)
    L = np.zeros((n * d, n * d))

    def blk(a: int, b: int) -> tuple[slice, slice]:
        return slice(a * d, (a + 1) * d), slice(b * d, (b + 1) * d)

    if k + 1 <= sheaf.degree:
        for t_pos, t_key in enumerate(_simplices(h, k + 1)):
            for i in range(k + 2):
                a = index[_drop(t_key, i)]
                fa = sheaf.maps[k + 1][t_pos, i]
                for j in range(k + 2):
                    b = index[_drop(t_key, j)]
                    fb = sheaf.maps[k + 1][t_pos, j]
                    L[blk(a, b)] += (-1) ** (i + j) * (fa.T @ fb)

    if k >= 1:
        by_facet: dict[tuple[int, tuple[int, ...]], list[tuple[int, int]]] = {}
        for s_pos, s_key in enumerate(sk_k):
            for p in range(k + 1):
                by_facet.setdefault(_drop(s_key, p), []).append((s_pos, p))
        for incidences in by_facet.values():
            for a, pa in incidences:
                fa = sheaf.maps[k][a, pa]
                for b, pb in incidences:
                    fb = sheaf.maps[k][b, pb]
                    L[blk(a, b)] += (-1) ** (pa + pb) * (fa @ fb.T)

    return L


def brute_isomorphic(h1: Hypergraph, h2: Hypergraph) -> bool:
    """Exhaustive isomorphism search over vertex bijections.

    An edge bijection compatible with a vertex bijection exists exactly
    when the relabeled label multisets coincide, so only vertex maps are
    enumerated.
    """
    if h1.n_nodes > MAX_ORACLE_NODES or h2.n_nodes > MAX_ORACLE_NODES:
        raise OracleError(f"oracle limited to {MAX_ORACLE_NODES} nodes")
    if h1.n_nodes != h2.n_nodes or h1.n_edges != h2.n_edges:
        return False
    sizes1 = sorted(len(l) for l in h1.edges)
    sizes2 = sorted(len(l) for l in h2.edges)
    if sizes1 != sizes2:
        return False

    from collections import Counter

    target = Counter(h2.label_ids(e) for e in range(h2.n_edges))
    for image in permutations(h2.nodes):
        mapping = {h1.nodes[i]: image[i] for i in range(h1.n_nodes)}
        mapped = Counter(
            frozenset(mapping[v] for v in h1.label_ids(e)) for e in range(h1.n_edges)
        )
        if mapped == target:
            return True
    return False


class OrderDependenceResult(NamedTuple):
    lap_first: np.ndarray   # degree-1 Laplacian under v0 < v1 < v2
    lap_second: np.ndarray  # degree-1 Laplacian under v1 < v0 < v2
    block_first: np.ndarray   # ({v0,v1}, {v1,v2}) block under the first order
    block_second: np.ndarray  # same block under the second order
    equal: bool


# Fixed block layout of the three 1-simplices of the full complex on
# {v0, v1, v2}; the layout never depends on the chosen total order.
_PAIRS = (frozenset({0, 1}), frozenset({0, 2}), frozenset({1, 2}))
_TRIANGLE = frozenset({0, 1, 2})


def ordered_complex_order_dependence(
    seed: int,
    d: int = 2,
    edge_to_triangle: dict[frozenset, np.ndarray] | None = None,
    vertex_to_edge: dict[tuple[int, frozenset], np.ndarray] | None = None,
) -> OrderDependenceResult:
    """Degree-1 Laplacians of the one-triangle ordered complex under two orders.

    The complex is every nonempty subset of {v0, v1, v2}; the sheaf zeroes
    the maps from {v1} and {v2} into {v1, v2} and draws everything else
    from a seeded generator (entries overridable).  Facet positions, hence
    incidence signs, come from sorting each simplex by the total order, so
    the two orders v0<v1<v2 and v1<v0<v2 give different operators: the
    ({v0,v1}, {v1,v2}) block flips sign.
    """
    rng = np.random.default_rng(seed)
    A = {pair: rng.uniform(-1.0, 1.0, size=(d, d)) for pair in _PAIRS}
    B: dict[tuple[int, frozenset], np.ndarray] = {}
    for pair in _PAIRS:
        for v in sorted(pair):
            B[(v, pair)] = rng.uniform(-1.0, 1.0, size=(d, d))
    B[(1, _PAIRS[2])] = np.zeros((d, d))
    B[(2, _PAIRS[2])] = np.zeros((d, d))
    if edge_to_triangle:
        A.update(edge_to_triangle)
    if vertex_to_edge:
        B.update(vertex_to_edge)

    def laplacian(order: tuple[int, int, int]) -> np.ndarray:
        rank = {v: i for i, v in enumerate(order)}

        def sign(removed: int, cofacet: frozenset) -> int:
            return (-1) ** sorted(cofacet, key=rank.__getitem__).index(removed)

        L = np.zeros((3 * d, 3 * d))

        def blk(a: int, b: int) -> tuple[slice, slice]:
            return slice(a * d, (a + 1) * d), slice(b * d, (b + 1) * d)

        for ia, pa in enumerate(_PAIRS):
            sa = sign(next(iter(_TRIANGLE - pa)), _TRIANGLE)
            for ib, pb in enumerate(_PAIRS):
                sb = sign(next(iter(_TRIANGLE - pb)), _TRIANGLE)
                L[blk(ia, ib)] += sa * sb * (A[pa].T @ A[pb])

        for ia, pa in enumerate(_PAIRS):
            for ib, pb in enumerate(_PAIRS):
                for v in sorted(pa & pb):
                    sa = sign(next(iter(pa - {v})), pa)
                    sb = sign(next(iter(pb - {v})), pb)
                    L[blk(ia, ib)] += sa * sb * (B[(v, pa)] @ B[(v, pb)].T)
        return L

    first = laplacian((0, 1, 2))
    second = laplacian((1, 0, 2))
    row, col = slice(0, d), slice(2 * d, 3 * d)
    return OrderDependenceResult(
        first,
        second,
        first[row, col].copy(),
        second[row, col].copy(),
        bool(np.array_equal(first, second)),
    )


def finite_difference_grad(
    f: Callable[[dict[str, np.ndarray]], float],
    params: dict[str, np.ndarray],
    step: float = 1e-4,
) -> dict[str, np.ndarray]:
    """Central finite differences of f per scalar parameter."""
    if step <= 0:
        raise OracleError("step must be positive")
    grads: dict[str, np.ndarray] = {}
    work = {name: np.array(value, dtype=float, copy=True) for name, value in params.items()}
    for name, value in work.items():
        g = np.zeros_like(value)
        flat = value.reshape(-1)
        gflat = g.reshape(-1)
        for idx in range(flat.size):
            keep = flat[idx]
            flat[idx] = keep + step
            up = f(work)
            flat[idx] = keep - step
            down = f(work)
            flat[idx] = keep
            if not (np.isfinite(up) and np.isfinite(down)):
                raise OracleError(f"non-finite loss while differencing {name}[{idx}]")
            gflat[idx] = (up - down) / (2.0 * step)
        grads[name] = g
    return grads
