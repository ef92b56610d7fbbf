"""Cellular sheaves on a skeleton: stalks, restriction maps, constructors.

A degree-m cellular sheaf assigns the stalk R^d to every simplex of
dimension <= m and a d x d restriction map to every (facet, cofacet)
incidence.  Restrictions are keyed by (cofacet dimension, cofacet index,
facet position), since the same facet can attach to a cofacet at several
positions in principle.  The adjoint of a restriction is its transpose:
stalks carry the standard inner product.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .hypergraph import Hypergraph
from .simplicial import Skeleton

DEFAULT_COMPAT_TOL = 1e-9


class SheafError(ValueError):
    """Invalid sheaf construction or lookup."""


class CellularSheaf:
    """Stalk dimension d and restriction maps over a skeleton.

    ``maps[n]`` is an array of shape (count_n, n+1, d, d); entry [i, p]
    is the map from the p-th facet of the i-th n-simplex into that simplex.
    All constructors in this module produce sheaves satisfying the
    double-facet compatibility condition (vacuous below degree 2); see
    check_compatibility for the explicit test.
    """

    def __init__(self, skeleton: Skeleton, stalk_dim: int, degree: int, maps: dict[int, np.ndarray]):
        if stalk_dim < 1:
            raise SheafError("stalk dimension must be >= 1")
        if degree < 0 or degree > skeleton.max_degree:
            raise SheafError(f"degree must lie in 0..{skeleton.max_degree}, got {degree}")
        for n in range(1, degree + 1):
            if n not in maps:
                raise SheafError(f"missing restriction maps for dimension {n}")
            arr = maps[n]
            want = (skeleton.count(n), n + 1, stalk_dim, stalk_dim)
            if arr.shape != want:
                raise SheafError(f"dimension-{n} maps have shape {arr.shape}, expected {want}")
            if not np.all(np.isfinite(arr)):
                raise SheafError(f"non-finite restriction map at dimension {n}")
        self.skeleton = skeleton
        self.stalk_dim = stalk_dim
        self.degree = degree
        self.maps = {n: maps[n] for n in range(1, degree + 1)}

    def restriction(self, n: int, cofacet_index: int, position: int) -> np.ndarray:
        """Map from the facet at ``position`` into the given n-simplex."""
        if not 1 <= n <= self.degree:
            raise SheafError(f"no restrictions at dimension {n} (degree {self.degree})")
        return self.maps[n][cofacet_index, position]


@dataclass(frozen=True)
class GraphSheaf:
    """Graph-side sheaf: one d x d map per (node, incident edge) pair."""

    stalk_dim: int
    maps: dict[tuple[int, int], np.ndarray]

    def restriction(self, v: int, e: int) -> np.ndarray:
        try:
            return self.maps[(v, e)]
        except KeyError:
            raise SheafError(f"no restriction for node {v} on edge {e}") from None


def identity_sheaf(sk: Skeleton, d: int, m: int | None = None) -> CellularSheaf:
    """Constant sheaf: every restriction is the d x d identity."""
    if m is None:
        m = sk.max_degree
    eye = np.eye(d)
    maps = {
        n: np.broadcast_to(eye, (sk.count(n), n + 1, d, d)).copy()
        for n in range(1, m + 1)
    }
    return CellularSheaf(sk, d, m, maps)


def random_sheaf(
    sk: Skeleton, d: int, m: int, seed: int, compatible: bool = False
) -> CellularSheaf:
    """Seeded random sheaf.

    For m <= 1 the entries are i.i.d. uniform on [-1, 1] (compatibility is
    vacuous).  For m >= 2 plain i.i.d. maps would violate the double-facet
    condition, so the call is rejected unless ``compatible=True``, which
    switches to restriction maps of the form Q(sigma) Q(facet)^T for random
    orthogonal potentials Q: compositions along any path from a double
    facet up to its cofacet telescope to the same map.
    """
    rng = np.random.default_rng(seed)
    if m >= 2 and not compatible:
        raise SheafError("random maps at degree >= 2 break compatibility; pass compatible=True")
    if not compatible:
        maps = {
            n: rng.uniform(-1.0, 1.0, size=(sk.count(n), n + 1, d, d))
            for n in range(1, m + 1)
        }
        return CellularSheaf(sk, d, m, maps)

    def orthogonal(count: int) -> np.ndarray:
        g = rng.standard_normal((count, d, d))
        q, r = np.linalg.qr(g)
        # Fix the sign gauge so the factorization is unique.
        signs = np.sign(np.einsum("kii->ki", r))
        signs[signs == 0] = 1.0
        return q * signs[:, None, :]

    potentials = [orthogonal(sk.count(n)) for n in range(0, m + 1)]
    maps = {}
    for n in range(1, m + 1):
        table = sk.facet_table[n]
        arr = np.empty((sk.count(n), n + 1, d, d))
        for i in range(sk.count(n)):
            for p in range(n + 1):
                arr[i, p] = potentials[n][i] @ potentials[n - 1][table[i, p]].T
        maps[n] = arr
    return CellularSheaf(sk, d, m, maps)


def pairwise_random_sheaf(sk: Skeleton, d: int, seed: int) -> CellularSheaf:
    """Degree-1 random sheaf whose two tuple orderings carry equal maps.

    The map into [v,w]_e from [v]_v depends only on (v, {v,w}, e), matching
    what a learned sheaf produces and what the degree-0 fast path assumes.
    """
    if sk.max_degree < 1:
        raise SheafError("needs a skeleton of depth >= 1")
    rng = np.random.default_rng(seed)
    cache: dict[tuple[int, int, int], np.ndarray] = {}
    count = sk.count(1)
    arr = np.empty((count, 2, d, d))
    for i, s in enumerate(sk.simplices[1]):
        a, b = s.nodes
        lo, hi = min(a, b), max(a, b)
        for p, src in ((0, b), (1, a)):
            key = (src, lo * sk.hypergraph.n_nodes + hi, s.edge)
            if key not in cache:
                cache[key] = rng.uniform(-1.0, 1.0, size=(d, d))
            arr[i, p] = cache[key]
    return CellularSheaf(sk, d, 1, {1: arr})


def identity_graph_sheaf(g: Hypergraph, d: int) -> GraphSheaf:
    _require_graph(g)
    eye = np.eye(d)
    maps = {(v, e): eye.copy() for e, label in enumerate(g.edges) for v in label}
    return GraphSheaf(d, maps)


def random_graph_sheaf(g: Hypergraph, d: int, seed: int) -> GraphSheaf:
    _require_graph(g)
    rng = np.random.default_rng(seed)
    maps = {
        (v, e): rng.uniform(-1.0, 1.0, size=(d, d))
        for e, label in enumerate(g.edges)
        for v in sorted(label)
    }
    return GraphSheaf(d, maps)


def _require_graph(g: Hypergraph) -> None:
    if not g.is_graph:
        raise SheafError("input must be a graph (every hyperedge of size 2)")


def induce_from_graph_sheaf(sk: Skeleton, gs: GraphSheaf) -> CellularSheaf:
    """Lift a graph sheaf to the induced structure of the graph.

    For an edge e = {v, w}, both orderings [v,w]_e and [w,v]_e receive the
    map F(v <| e) on their [v]_v facet and F(w <| e) on their [w]_w facet.
    The degree-0 assembly over this sheaf equals exactly twice the graph
    sheaf Laplacian, and the normalized forms coincide.
    """
    g = sk.hypergraph
    _require_graph(g)
    if sk.max_degree < 1:
        raise SheafError("needs a skeleton of depth >= 1")
    d = gs.stalk_dim
    count = sk.count(1)
    arr = np.empty((count, 2, d, d))
    for i, s in enumerate(sk.simplices[1]):
        a, b = s.nodes
        # Position 0 drops the leading entry, leaving [b]_b; position 1 leaves [a]_a.
        arr[i, 0] = gs.restriction(b, s.edge)
        arr[i, 1] = gs.restriction(a, s.edge)
    return CellularSheaf(sk, d, 1, {1: arr})


class CompatibilityReport(NamedTuple):
    ok: bool
    violations: list[tuple[int, int, int, int, float]]  # (dim, simplex, i, j, max_err)


def check_compatibility(
    sheaf: CellularSheaf, sk: Skeleton | None = None, tol: float = DEFAULT_COMPAT_TOL
) -> CompatibilityReport:
    """Verify the double-facet condition; vacuously true below degree 2.

    For every n-simplex sigma with n >= 2 and positions j < i, the two
    compositions from the shared double facet up to sigma must agree:
    going through d_i(sigma) (then attaching at position j) and through
    d_j(sigma) (attaching at position i-1) land on the same map.
    """
    if sk is None:
        sk = sheaf.skeleton
    violations: list[tuple[int, int, int, int, float]] = []
    for n in range(2, sheaf.degree + 1):
        table = sk.facet_table[n]
        for s_idx in range(sk.count(n)):
            for i in range(n + 1):
                for j in range(i):
                    fi = table[s_idx, i]
                    fj = table[s_idx, j]
                    left = sheaf.restriction(n, s_idx, i) @ sheaf.restriction(n - 1, fi, j)
                    right = sheaf.restriction(n, s_idx, j) @ sheaf.restriction(n - 1, fj, i - 1)
                    err = float(np.max(np.abs(left - right)))
                    if err > tol:
                        violations.append((n, s_idx, i, j, err))
    return CompatibilityReport(not violations, violations)


def save_sheaf(sheaf: CellularSheaf) -> str:
    """JSON dump: {d, degree, entries: [{dim, cofacet_index, position, matrix}]}.

    Matrices are row-major float lists; the dump round-trips bit-exactly.
    """
    entries = []
    for n in range(1, sheaf.degree + 1):
        arr = sheaf.maps[n]
        for i in range(arr.shape[0]):
            for p in range(arr.shape[1]):
                entries.append(
                    {
                        "dim": n,
                        "cofacet_index": i,
                        "position": p,
                        "matrix": [float(x) for x in arr[i, p].ravel()],
                    }
                )
    return json.dumps({"d": sheaf.stalk_dim, "degree": sheaf.degree, "entries": entries})


def load_sheaf(sk: Skeleton, text: str) -> CellularSheaf:
    """Parse a save_sheaf dump against a skeleton."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SheafError(f"invalid sheaf JSON: {exc}") from exc
    try:
        d = int(obj["d"])
        degree = int(obj["degree"])
        raw_entries = obj["entries"]
    except (KeyError, TypeError) as exc:
        raise SheafError("sheaf JSON needs fields d, degree, entries") from exc
    maps = {n: np.full((sk.count(n), n + 1, d, d), np.nan) for n in range(1, degree + 1)}
    for ent in raw_entries:
        try:
            n = int(ent["dim"])
            i = int(ent["cofacet_index"])
            p = int(ent["position"])
            mat = np.asarray(ent["matrix"], dtype=float).reshape(d, d)
        except (KeyError, TypeError, ValueError) as exc:
            raise SheafError(f"malformed sheaf entry {ent!r}") from exc
        if n not in maps:
            raise SheafError(f"entry dimension {n} outside degree {degree}")
        if not (0 <= i < maps[n].shape[0] and 0 <= p <= n):
            raise SheafError(f"sheaf entry ({n}, {i}, {p}) out of range")
        maps[n][i, p] = mat
    for n, arr in maps.items():
        if np.isnan(arr).any():
            raise SheafError(f"sheaf file leaves dimension-{n} restrictions unset")
    return CellularSheaf(sk, d, degree, maps)
