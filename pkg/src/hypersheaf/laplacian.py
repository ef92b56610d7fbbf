"""Degree-k sheaf Laplacians: block-sparse assembly, normalization, spectra.

The degree-k Laplacian acts on k-cochains (one R^d value per nondegenerate
k-simplex).  Its (sigma, sigma') block aggregates, over every common
cofacet tau, the term sign * F(sigma <| tau)^T F(sigma' <| tau) and, over
every common facet mu, the term sign * F(mu <| sigma) F(mu <| sigma'')^T,
where sign is the product of the two signed incidences.  With the product
sign the operator factors as (signed coboundary)^T (signed coboundary)
plus the analogous lower Gram term, hence is symmetric PSD; reading the
sign as (-1) raised to the sum of the incidence values (which live in
{-1, +1}) would make every contribution positive and contradicts both the
explicit 0-degree expansion and the graph reduction L0 = 2 L_graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .hypergraph import Hypergraph
from .sheaf import CellularSheaf, GraphSheaf
from .simplicial import Skeleton

DEFAULT_EIG_TOL = 1e-8
DENSE_EIG_LIMIT = 2000


class LaplacianError(ValueError):
    """Invalid assembly request or operand mismatch."""


class BlockSparseMatrix:
    """Symmetric sparse matrix stored as sorted d x d block coordinates.

    Entries are deduplicated (duplicate coordinates are summed on build)
    and sorted by (row, col), so identical inputs produce bit-identical
    layouts regardless of accumulation order.
    """

    def __init__(
        self,
        block_dim: int,
        n_blocks: int,
        rows: np.ndarray,
        cols: np.ndarray,
        blocks: np.ndarray,
    ):
        self.block_dim = block_dim
        self.n_blocks = n_blocks
        self.rows = rows
        self.cols = cols
        self.blocks = blocks

    @classmethod
    def from_accumulator(
        cls, block_dim: int, n_blocks: int, acc: Mapping[tuple[int, int], np.ndarray]
    ) -> "BlockSparseMatrix":
        keys = sorted(acc.keys())
        rows = np.array([k[0] for k in keys], dtype=np.int64)
        cols = np.array([k[1] for k in keys], dtype=np.int64)
        if keys:
            blocks = np.stack([np.asarray(acc[k], dtype=float) for k in keys])
        else:
            blocks = np.zeros((0, block_dim, block_dim))
        return cls(block_dim, n_blocks, rows, cols, blocks)

    @classmethod
    def zeros(cls, block_dim: int, n_blocks: int) -> "BlockSparseMatrix":
        return cls.from_accumulator(block_dim, n_blocks, {})

    @property
    def nnz_blocks(self) -> int:
        return len(self.rows)

    @property
    def flat_dim(self) -> int:
        return self.n_blocks * self.block_dim

    def to_dense(self) -> np.ndarray:
        d = self.block_dim
        out = np.zeros((self.flat_dim, self.flat_dim))
        for r, c, b in zip(self.rows, self.cols, self.blocks):
            out[r * d : (r + 1) * d, c * d : (c + 1) * d] += b
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Apply to a flat cochain (flat_dim,) or stacked channels (flat_dim, f)."""
        if x.shape[0] != self.flat_dim:
            raise LaplacianError(f"operand has leading dim {x.shape[0]}, expected {self.flat_dim}")
        if self.n_blocks == 0:
            return np.zeros_like(x)
        d = self.block_dim
        xb = x.reshape(self.n_blocks, d, -1)
        out = np.zeros_like(xb)
        if self.nnz_blocks:
            contrib = np.einsum("kij,kjf->kif", self.blocks, xb[self.cols])
            np.add.at(out, self.rows, contrib)
        return out.reshape(x.shape)

    def diagonal_blocks(self) -> np.ndarray:
        d = self.block_dim
        out = np.zeros((self.n_blocks, d, d))
        for r, c, b in zip(self.rows, self.cols, self.blocks):
            if r == c:
                out[r] += b
        return out

    def is_symmetric(self, tol: float = 0.0) -> bool:
        lookup = {(int(r), int(c)): b for r, c, b in zip(self.rows, self.cols, self.blocks)}
        for (r, c), b in lookup.items():
            other = lookup.get((c, r))
            if other is None or np.max(np.abs(b - other.T), initial=0.0) > tol:
                return False
        return True

    def to_csr(self):
        from scipy import sparse

        d = self.block_dim
        if not self.nnz_blocks:
            return sparse.csr_matrix((self.flat_dim, self.flat_dim))
        off = np.arange(d)
        rr = np.broadcast_to(
            self.rows[:, None, None] * d + off[None, :, None], self.blocks.shape
        )
        cc = np.broadcast_to(
            self.cols[:, None, None] * d + off[None, None, :], self.blocks.shape
        )
        mat = sparse.coo_matrix(
            (self.blocks.ravel(), (rr.ravel(), cc.ravel())),
            shape=(self.flat_dim, self.flat_dim),
        )
        return mat.tocsr()

    def csv_lines(self) -> list[str]:
        """Flat COO export: header comment, then sorted "row,col,value" triplets."""
        d = self.block_dim
        lines = [f"# n_blocks={self.n_blocks} d={d}", "row,col,value"]
        triplets = []
        for r, c, b in zip(self.rows, self.cols, self.blocks):
            for i in range(d):
                for j in range(d):
                    v = b[i, j]
                    if v != 0.0:
                        triplets.append((int(r) * d + i, int(c) * d + j, v))
        triplets.sort(key=lambda t: (t[0], t[1]))
        lines.extend(f"{r},{c},{v:.17g}" for r, c, v in triplets)
        return lines


@dataclass
class Cochain:
    """Feature assignment to k-simplices: d values per simplex, optional channels."""

    block_dim: int
    values: np.ndarray  # (n_blocks * d,) or (n_blocks * d, f)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[0] % self.block_dim != 0:
            raise LaplacianError("cochain length must be a multiple of the block dimension")
        if not np.all(np.isfinite(self.values)):
            raise LaplacianError("cochain values must be finite")

    @property
    def n_blocks(self) -> int:
        return self.values.shape[0] // self.block_dim


class _Accumulator(dict):
    def add(self, r: int, c: int, block: np.ndarray) -> None:
        key = (r, c)
        if key in self:
            self[key] = self[key] + block
        else:
            self[key] = block


def _require_degree(sk: Skeleton, sheaf: CellularSheaf, k: int) -> None:
    if k < 0 or k > sk.max_degree:
        raise LaplacianError(f"degree {k} outside skeleton range 0..{sk.max_degree}")
    if k > sheaf.degree:
        raise LaplacianError(f"degree {k} exceeds sheaf degree {sheaf.degree}")


def assemble_laplacian(sk: Skeleton, sheaf: CellularSheaf, k: int) -> BlockSparseMatrix:
    """Assemble the degree-k sheaf Laplacian over nondegenerate k-simplices.

    The upper term sweeps every (k+1)-simplex tau and all ordered pairs of
    its facet positions; the lower term (k >= 1) sweeps common facets of
    pairs of k-simplices.  Self pairs are included, which is what makes the
    diagonal equal to assemble_diagonal.  The upper term requires
    k + 1 <= sheaf.degree and is dropped when the sheaf stops at degree k.
    """
    _require_degree(sk, sheaf, k)
    d = sheaf.stalk_dim
    acc = _Accumulator()

    if k + 1 <= sheaf.degree:
        maps_up = sheaf.maps[k + 1]
        table = sk.facet_table[k + 1]
        for tau in range(table.shape[0]):
            row = table[tau]
            for i in range(k + 2):
                fi = maps_up[tau, i]
                for j in range(k + 2):
                    sign = (-1) ** (i + j)
                    acc.add(int(row[i]), int(row[j]), sign * (fi.T @ maps_up[tau, j]))

    if k >= 1:
        maps_down = sheaf.maps[k]
        table = sk.facet_table[k]
        incident: list[list[tuple[int, int]]] = [[] for _ in sk.simplices[k - 1]]
        for s in range(table.shape[0]):
            for p in range(k + 1):
                incident[table[s, p]].append((s, p))
        for cofs in incident:
            for a, pa in cofs:
                fa = maps_down[a, pa]
                for b, pb in cofs:
                    sign = (-1) ** (pa + pb)
                    acc.add(a, b, sign * (fa @ maps_down[b, pb].T))

    return BlockSparseMatrix.from_accumulator(d, sk.count(k), acc)


def assemble_diagonal(sk: Skeleton, sheaf: CellularSheaf, k: int) -> BlockSparseMatrix:
    """Diagonal blocks: sum of F^T F over cofacets plus F F^T over facets.

    Equals the diagonal of assemble_laplacian, because a nondegenerate
    simplex attaches to each nondegenerate cofacet at exactly one position.
    """
    _require_degree(sk, sheaf, k)
    d = sheaf.stalk_dim
    acc = _Accumulator()

    if k + 1 <= sheaf.degree:
        maps_up = sheaf.maps[k + 1]
        table = sk.facet_table[k + 1]
        for tau in range(table.shape[0]):
            for i in range(k + 2):
                f = maps_up[tau, i]
                acc.add(int(table[tau, i]), int(table[tau, i]), f.T @ f)

    if k >= 1:
        maps_down = sheaf.maps[k]
        for s in range(sk.count(k)):
            for p in range(k + 1):
                f = maps_down[s, p]
                acc.add(s, s, f @ f.T)

    return BlockSparseMatrix.from_accumulator(d, sk.count(k), acc)


RestrictionLookup = Callable[[int, int, int], np.ndarray]


def degree0_direct(h: Hypergraph, restriction: RestrictionLookup, d: int) -> BlockSparseMatrix:
    """Closed-form degree-0 assembly for order-symmetric sheaves.

    ``restriction(v, w, e)`` must return the map from [v]_v into [v,w]_e
    AND into [w,v]_e (the two orderings are assumed to carry equal maps, as
    learned sheaves do); each unordered pair then contributes its four-term
    sum with an overall factor 2.  Must equal assemble_laplacian at k=0
    over the matching skeleton sheaf.
    """
    acc = _Accumulator()
    for e, label in enumerate(h.edges):
        members = sorted(label)
        for a_pos, v in enumerate(members):
            for w in members[a_pos + 1 :]:
                fv = restriction(v, w, e)
                fw = restriction(w, v, e)
                if fv.shape != (d, d) or fw.shape != (d, d):
                    raise LaplacianError(f"restriction for pair ({v}, {w}) edge {e} has wrong shape")
                acc.add(v, v, 2.0 * (fv.T @ fv))
                acc.add(w, w, 2.0 * (fw.T @ fw))
                acc.add(v, w, -2.0 * (fv.T @ fw))
                acc.add(w, v, -2.0 * (fw.T @ fv))
    return BlockSparseMatrix.from_accumulator(d, h.n_nodes, acc)


def _block_inv_sqrt(block: np.ndarray, tol: float) -> np.ndarray:
    sym_err = np.max(np.abs(block - block.T), initial=0.0)
    scale = np.max(np.abs(block), initial=0.0)
    if sym_err > 1e-9 * (1.0 + scale):
        raise LaplacianError("diagonal block is not symmetric")
    if scale == 0.0:
        return np.zeros_like(block)
    w, v = np.linalg.eigh((block + block.T) / 2.0)
    cutoff = tol * w[-1]
    inv = np.where(w > cutoff, 1.0 / np.sqrt(np.where(w > cutoff, w, 1.0)), 0.0)
    return (v * inv) @ v.T


def normalize(
    L: BlockSparseMatrix,
    D: BlockSparseMatrix,
    tol: float = DEFAULT_EIG_TOL,
    eps: float = 0.0,
) -> BlockSparseMatrix:
    """Return D^{-1/2} L D^{-1/2} with blockwise pseudo-inverse square roots.

    Each diagonal block of D is eigendecomposed; eigenvalues at or below
    tol times the block's largest eigenvalue are treated as zero, so
    singular blocks (isolated simplices) yield zero rows rather than blow
    up.  ``eps > 0`` switches to (D + eps I)^{-1/2} regularization.
    """
    if L.block_dim != D.block_dim or L.n_blocks != D.n_blocks:
        raise LaplacianError("L and D must share block structure")
    d = L.block_dim
    if L.n_blocks == 0:
        return BlockSparseMatrix.zeros(d, 0)
    diag = D.diagonal_blocks()
    if eps > 0.0:
        diag = diag + eps * np.eye(d)
    scal = np.stack([_block_inv_sqrt(diag[i], tol) for i in range(D.n_blocks)])
    acc = _Accumulator()
    for r, c, b in zip(L.rows, L.cols, L.blocks):
        acc.add(int(r), int(c), scal[r] @ b @ scal[c])
    return BlockSparseMatrix.from_accumulator(d, L.n_blocks, acc)


def graph_sheaf_laplacian(
    g: Hypergraph, gs: GraphSheaf, tol: float = DEFAULT_EIG_TOL
) -> tuple[BlockSparseMatrix, BlockSparseMatrix, BlockSparseMatrix]:
    """Graph-side reference operators (L, D, normalized L) for a graph sheaf.

    The v-block row of L is sum over incident edges e = {v, u} of
    F(v <| e)^T (F(v <| e) x_v - F(u <| e) x_u); D keeps the F^T F part.
    """
    if not g.is_graph:
        raise LaplacianError("input must be a graph (every hyperedge of size 2)")
    d = gs.stalk_dim
    acc_l = _Accumulator()
    acc_d = _Accumulator()
    for e, label in enumerate(g.edges):
        v, u = sorted(label)
        fv = gs.restriction(v, e)
        fu = gs.restriction(u, e)
        acc_l.add(v, v, fv.T @ fv)
        acc_l.add(u, u, fu.T @ fu)
        acc_l.add(v, u, -(fv.T @ fu))
        acc_l.add(u, v, -(fu.T @ fv))
        acc_d.add(v, v, fv.T @ fv)
        acc_d.add(u, u, fu.T @ fu)
    L = BlockSparseMatrix.from_accumulator(d, g.n_nodes, acc_l)
    D = BlockSparseMatrix.from_accumulator(d, g.n_nodes, acc_d)
    return L, D, normalize(L, D, tol)


def spectrum(M: BlockSparseMatrix, count: int = 6, tol: float = DEFAULT_EIG_TOL) -> np.ndarray:
    """Ascending extreme eigenvalues: the ``count`` smallest and largest.

    Dense solver up to flat dimension 2000, Lanczos iteration beyond.
    Raises on asymmetry above 1e-10.
    """
    if not M.is_symmetric(tol=1e-10):
        raise LaplacianError("matrix is not symmetric within 1e-10")
    n = M.flat_dim
    if n == 0:
        return np.zeros(0)
    if n <= DENSE_EIG_LIMIT:
        w = np.linalg.eigvalsh(M.to_dense())
        if 2 * count >= n:
            return w
        return np.concatenate([w[:count], w[-count:]])
    from scipy.sparse.linalg import eigsh

    csr = M.to_csr()
    small = eigsh(csr, k=count, which="SA", tol=tol, return_eigenvectors=False)
    large = eigsh(csr, k=count, which="LA", tol=tol, return_eigenvectors=False)
    return np.sort(np.concatenate([small, large]))


def dirichlet_energy(L: BlockSparseMatrix, x: np.ndarray | Cochain) -> float:
    """Quadratic form x^T L x; trace form when x carries stacked channels."""
    vec = x.values if isinstance(x, Cochain) else np.asarray(x, dtype=float)
    if vec.shape[0] != L.flat_dim:
        raise LaplacianError(f"cochain length {vec.shape[0]} does not match flat dim {L.flat_dim}")
    return float(np.sum(vec * L.matvec(vec)))
