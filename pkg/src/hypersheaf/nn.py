"""Learned sheaf diffusion for node classification on a hypergraph.

Each layer learns a degree-1 sheaf from the current features (one d x d
restriction map per node-within-pair, shared by both tuple orderings of
the pair), assembles the normalized degree-0 sheaf Laplacian from it, and
takes one explicit-Euler-style step

    X <- X - act( Lnorm (I kron W1) X W2 ).

Because the learned map depends only on the node pair, the Laplacian has
the closed form with blocks -2 c_vw * Fv^T Fw (c_vw = number of shared
hyperedges) and diagonal sum 2 c_vw * Fv^T Fv; the model builds that fast
path densely, and it must agree with the generic skeleton assembly.

Everything runs in float64 so the analytic gradients can be validated
against central finite differences.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn as tnn

from .hypergraph import Hypergraph, clique_expansion_multigraph
from .sheaf import CellularSheaf
from .simplicial import Skeleton

DTYPE = torch.float64

_ACTIVATIONS = {
    "identity": lambda z: z,
    "tanh": torch.tanh,
    "relu": torch.relu,
}


@dataclass
class ModelConfig:
    stalk_dim: int = 2
    channels: int = 4
    layers: int = 2
    activation: str = "tanh"
    sheaf_form: str = "diagonal"  # diagonal | general
    pair_width: int = 4
    hidden_width: int = 8
    node_summary: str = "mean"  # mean | flatten
    lr: float = 0.02
    epochs: int = 200
    seed: int = 0
    weight_decay: float = 0.0
    eig_tol: float = 1e-8

    def __post_init__(self) -> None:
        if min(self.stalk_dim, self.channels, self.layers, self.pair_width, self.hidden_width) < 1:
            raise ValueError("stalk_dim, channels, layers, pair_width, hidden_width must be >= 1")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.sheaf_form not in ("diagonal", "general"):
            raise ValueError(f"unknown sheaf form {self.sheaf_form!r}")
        if self.node_summary not in ("mean", "flatten"):
            raise ValueError(f"unknown node summary {self.node_summary!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in obj.items() if k in known})


def co_membership_pairs(h: Hypergraph) -> tuple[np.ndarray, np.ndarray]:
    """Unordered co-member pairs (sorted) with shared-hyperedge counts."""
    weights = clique_expansion_multigraph(h)
    keys = sorted(k for k in weights if k[0] < k[1])
    pairs = np.array(keys, dtype=np.int64).reshape(-1, 2)
    counts = np.array([weights[k] for k in keys], dtype=float)
    return pairs, counts


class SheafLearner(tnn.Module):
    """Restriction-map predictor for node pairs.

    The pair feature tanh(M^T relu(W^T ([x_v;1] * [x_w;1]))) is symmetric
    in (v, w) because the entrywise product is; the per-endpoint map is a
    linear head on [x_endpoint ; pair feature], emitting d diagonal entries
    or a full d x d block.
    """

    def __init__(self, summary_dim: int, hidden: int, pair_width: int, out_dim: int):
        super().__init__()
        self.W = tnn.Parameter(torch.empty(summary_dim + 1, hidden, dtype=DTYPE))
        self.M = tnn.Parameter(torch.empty(hidden, pair_width, dtype=DTYPE))
        self.head = tnn.Linear(summary_dim + pair_width, out_dim, dtype=DTYPE)
        tnn.init.xavier_uniform_(self.W)
        tnn.init.xavier_uniform_(self.M)

    def pair_feature(self, sv: torch.Tensor, sw: torch.Tensor) -> torch.Tensor:
        ones = torch.ones(sv.shape[0], 1, dtype=sv.dtype)
        av = torch.cat([sv, ones], dim=1)
        aw = torch.cat([sw, ones], dim=1)
        return torch.tanh(torch.relu((av * aw) @ self.W) @ self.M)

    def forward(self, summary: torch.Tensor, pairs: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        sv = summary[pairs[:, 0]]
        sw = summary[pairs[:, 1]]
        feat = self.pair_feature(sv, sw)
        fv = self.head(torch.cat([sv, feat], dim=1))
        fw = self.head(torch.cat([sw, feat], dim=1))
        return fv, fw


class SheafDiffusionModel(tnn.Module):
    """Input projection, sheaf-diffusion layers, linear classification head."""

    def __init__(self, cfg: ModelConfig, h: Hypergraph, in_dim: int, n_classes: int):
        super().__init__()
        self.cfg = cfg
        self.n_nodes = h.n_nodes
        d, f = cfg.stalk_dim, cfg.channels
        pairs, counts = co_membership_pairs(h)
        self.register_buffer("pairs", torch.from_numpy(pairs), persistent=False)
        self.register_buffer("counts", torch.from_numpy(counts).to(DTYPE), persistent=False)

        summary_dim = d if cfg.node_summary == "mean" else d * f
        out_dim = d if cfg.sheaf_form == "diagonal" else d * d
        self.learner = SheafLearner(summary_dim, cfg.hidden_width, cfg.pair_width, out_dim)
        self.proj = tnn.Linear(in_dim, d * f, dtype=DTYPE)
        self.head = tnn.Linear(d * f, n_classes, dtype=DTYPE)
        self.w1 = tnn.ParameterList(
            tnn.Parameter(torch.eye(d, dtype=DTYPE)) for _ in range(cfg.layers)
        )
        self.w2 = tnn.ParameterList()
        for _ in range(cfg.layers):
            w = torch.empty(f, f, dtype=DTYPE)
            if f > 1:
                tnn.init.orthogonal_(w)
            else:
                tnn.init.ones_(w)
            self.w2.append(tnn.Parameter(w))
        self._act = _ACTIVATIONS[cfg.activation]
        # Test hook: a fixed dense operator to use instead of the learned one.
        self.laplacian_override: torch.Tensor | None = None

    def node_summary(self, x: torch.Tensor) -> torch.Tensor:
        d, f = self.cfg.stalk_dim, self.cfg.channels
        blocks = x.view(self.n_nodes, d, f)
        if self.cfg.node_summary == "mean":
            return blocks.mean(dim=2)
        return blocks.reshape(self.n_nodes, d * f)

    def restriction_maps(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Per-pair maps (first endpoint, second endpoint) on current features."""
        return self.learner(self.node_summary(x), self.pairs)

    def normalized_laplacian(self, x: torch.Tensor) -> torch.Tensor:
        """Dense normalized degree-0 sheaf Laplacian from the learned maps."""
        d = self.cfg.stalk_dim
        n = self.n_nodes
        fv, fw = self.restriction_maps(x)
        c2 = 2.0 * self.counts
        pv, pw = self.pairs[:, 0], self.pairs[:, 1]

        if self.cfg.sheaf_form == "diagonal":
            deg = torch.zeros(n, d, dtype=DTYPE)
            deg = deg.index_add(0, pv, c2[:, None] * fv * fv)
            deg = deg.index_add(0, pw, c2[:, None] * fw * fw)
            inv = self._diag_inv_sqrt(deg)
            off = -c2[:, None] * fv * fw  # diagonal of each (v, w) block
            off_n = inv[pv] * off * inv[pw]
            diag_n = inv * deg * inv

            lane = torch.arange(d)
            idx_r = torch.cat(
                [
                    (pv[:, None] * d + lane).reshape(-1),
                    (pw[:, None] * d + lane).reshape(-1),
                    (torch.arange(n)[:, None] * d + lane).reshape(-1),
                ]
            )
            idx_c = torch.cat(
                [
                    (pw[:, None] * d + lane).reshape(-1),
                    (pv[:, None] * d + lane).reshape(-1),
                    (torch.arange(n)[:, None] * d + lane).reshape(-1),
                ]
            )
            vals = torch.cat([off_n.reshape(-1), off_n.reshape(-1), diag_n.reshape(-1)])
            return torch.zeros(n * d, n * d, dtype=DTYPE).index_put(
                (idx_r, idx_c), vals, accumulate=True
            )

        fv = fv.view(-1, d, d)
        fw = fw.view(-1, d, d)
        deg = torch.zeros(n, d * d, dtype=DTYPE)
        deg = deg.index_add(
            0, pv, (c2[:, None, None] * fv.transpose(1, 2) @ fv).reshape(-1, d * d)
        )
        deg = deg.index_add(
            0, pw, (c2[:, None, None] * fw.transpose(1, 2) @ fw).reshape(-1, d * d)
        )
        deg = deg.view(n, d, d)
        inv = self._block_inv_sqrt(deg)
        off = -c2[:, None, None] * fv.transpose(1, 2) @ fw
        off_n = inv[pv] @ off @ inv[pw]
        diag_n = inv @ deg @ inv

        lane = torch.arange(d)
        grid_r = lane[:, None].expand(d, d).reshape(-1)
        grid_c = lane[None, :].expand(d, d).reshape(-1)

        def block_idx(rblk: torch.Tensor, cblk: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
            return (
                (rblk[:, None] * d + grid_r).reshape(-1),
                (cblk[:, None] * d + grid_c).reshape(-1),
            )

        nodes = torch.arange(n)
        r_vw, c_vw = block_idx(pv, pw)
        r_wv, c_wv = block_idx(pw, pv)
        r_dd, c_dd = block_idx(nodes, nodes)
        idx_r = torch.cat([r_vw, r_wv, r_dd])
        idx_c = torch.cat([c_vw, c_wv, c_dd])
        vals = torch.cat(
            [off_n.reshape(-1), off_n.transpose(1, 2).reshape(-1), diag_n.reshape(-1)]
        )
        return torch.zeros(n * d, n * d, dtype=DTYPE).index_put(
            (idx_r, idx_c), vals, accumulate=True
        )

    def _diag_inv_sqrt(self, deg: torch.Tensor) -> torch.Tensor:
        top = deg.max(dim=1, keepdim=True).values
        cut = self.cfg.eig_tol * top
        keep = deg > cut
        safe = torch.where(keep, deg, torch.ones_like(deg))
        return torch.where(keep, safe.rsqrt(), torch.zeros_like(deg))

    def _block_inv_sqrt(self, deg: torch.Tensor) -> torch.Tensor:
        # eigh gradients break down on fully degenerate (zero) blocks, so
        # isolated nodes bypass the decomposition.
        d = deg.shape[-1]
        live = deg.abs().reshape(deg.shape[0], -1).max(dim=1).values > 0.0
        out = torch.zeros_like(deg)
        if live.any():
            w, v = torch.linalg.eigh(deg[live])
            cut = self.cfg.eig_tol * w[:, -1:].clamp_min(0.0)
            keep = w > cut
            inv = torch.where(keep, torch.where(keep, w, torch.ones_like(w)).rsqrt(), torch.zeros_like(w))
            out[live] = (v * inv[:, None, :]) @ v.transpose(1, 2)
        return out

    def layer(self, x: torch.Tensor, t: int) -> torch.Tensor:
        d, f = self.cfg.stalk_dim, self.cfg.channels
        lap = self.laplacian_override
        if lap is None:
            lap = self.normalized_laplacian(x)
        y = torch.einsum("ij,njf->nif", self.w1[t], x.view(self.n_nodes, d, f))
        z = lap @ y.reshape(self.n_nodes * d, f) @ self.w2[t]
        return x - self._act(z)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        if features.shape[0] != self.n_nodes:
            raise ValueError(f"expected {self.n_nodes} feature rows, got {features.shape[0]}")
        d, f = self.cfg.stalk_dim, self.cfg.channels
        x = self.proj(features.to(DTYPE)).view(self.n_nodes, d, f).reshape(self.n_nodes * d, f)
        for t in range(self.cfg.layers):
            x = self.layer(x, t)
        return self.head(x.reshape(self.n_nodes, d * f))


def export_learned_sheaf(model: SheafDiffusionModel, sk: Skeleton, x: torch.Tensor) -> CellularSheaf:
    """Materialize the learned degree-1 sheaf on a skeleton of the same hypergraph.

    Both tuple orderings of a pair receive the same per-endpoint map, which
    is exactly what the learner produces; used to cross-check the model's
    fast Laplacian path against the generic assembly.
    """
    d = model.cfg.stalk_dim
    with torch.no_grad():
        fv, fw = model.restriction_maps(x)
    pairs = model.pairs.numpy()
    table: dict[tuple[int, int], np.ndarray] = {}
    for p in range(pairs.shape[0]):
        v, w = int(pairs[p, 0]), int(pairs[p, 1])
        for src, raw in ((v, fv[p]), (w, fw[p])):
            mat = raw.numpy()
            if model.cfg.sheaf_form == "diagonal":
                mat = np.diag(mat)
            else:
                mat = mat.reshape(d, d)
            table[(src, v * model.n_nodes + w)] = mat
    count = sk.count(1)
    arr = np.empty((count, 2, d, d))
    for i, s in enumerate(sk.simplices[1]):
        a, b = s.nodes
        lo, hi = min(a, b), max(a, b)
        arr[i, 0] = table[(b, lo * model.n_nodes + hi)]
        arr[i, 1] = table[(a, lo * model.n_nodes + hi)]
    return CellularSheaf(sk, d, 1, {1: arr})


def split_indices(
    n: int, seed: int, fractions: tuple[float, float, float] = (0.5, 0.25, 0.25)
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded shuffle split into train/validation/test index arrays."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    return order[:n_train], order[n_train : n_train + n_val], order[n_train + n_val :]


def _accuracy(logits: torch.Tensor, labels: torch.Tensor, idx: np.ndarray) -> float:
    if len(idx) == 0:
        return float("nan")
    pred = logits[idx].argmax(dim=1)
    return float((pred == labels[idx]).double().mean())


@dataclass
class TrainResult:
    model: SheafDiffusionModel
    trace: list[tuple[int, float, float, float, float]]  # epoch, loss, train/val/test acc
    best_epoch: int
    best_val_acc: float
    test_acc: float  # test accuracy at the best-validation epoch
    seconds: float = 0.0


def train_model(
    cfg: ModelConfig,
    h: Hypergraph,
    features: np.ndarray,
    labels: np.ndarray,
    seed: int | None = None,
) -> TrainResult:
    """Adam training with selection at the minimum-validation-error epoch."""
    if seed is None:
        seed = cfg.seed
    if features.shape[0] != h.n_nodes or labels.shape[0] != h.n_nodes:
        raise ValueError("features and labels must have one row per node")
    labels_t = torch.from_numpy(np.asarray(labels, dtype=np.int64))
    n_classes = int(labels_t.max()) + 1

    train_idx, val_idx, test_idx = split_indices(h.n_nodes, seed)
    present = set(int(c) for c in labels_t[train_idx].unique())
    if present != set(range(n_classes)):
        raise ValueError("degenerate split: some class is missing from the training set")

    torch.manual_seed(seed)
    model = SheafDiffusionModel(cfg, h, features.shape[1], n_classes)
    feats = torch.from_numpy(np.asarray(features, dtype=np.float64))
    optimizer = torch.optim.Adam(
        model.parameters(),
        lr=cfg.lr,
        betas=(0.9, 0.999),
        eps=1e-8,
        weight_decay=cfg.weight_decay,
    )
    loss_fn = tnn.CrossEntropyLoss()

    trace = []
    best_val, best_epoch, best_test = -1.0, -1, float("nan")
    start = time.perf_counter()
    for epoch in range(cfg.epochs):
        model.train()
        optimizer.zero_grad()
        logits = model(feats)
        loss = loss_fn(logits[train_idx], labels_t[train_idx])
        if not torch.isfinite(loss):
            raise FloatingPointError(f"non-finite training loss at epoch {epoch}")
        loss.backward()
        optimizer.step()

        model.eval()
        with torch.no_grad():
            logits = model(feats)
        accs = (
            _accuracy(logits, labels_t, train_idx),
            _accuracy(logits, labels_t, val_idx),
            _accuracy(logits, labels_t, test_idx),
        )
        trace.append((epoch, float(loss.detach()), *accs))
        if accs[1] > best_val:
            best_val, best_epoch, best_test = accs[1], epoch, accs[2]
    return TrainResult(model, trace, best_epoch, best_val, best_test, time.perf_counter() - start)


def loss_and_grads(
    model: SheafDiffusionModel,
    features: torch.Tensor,
    labels: torch.Tensor,
    idx: np.ndarray,
) -> tuple[float, dict[str, np.ndarray]]:
    """Cross-entropy loss on the index set and its gradient per parameter tensor."""
    model.zero_grad(set_to_none=True)
    logits = model(features)
    loss = tnn.functional.cross_entropy(logits[idx], labels[idx])
    if not torch.isfinite(loss):
        raise FloatingPointError("non-finite loss")
    loss.backward()
    grads = {}
    for name, p in model.named_parameters():
        grads[name] = (
            p.grad.detach().numpy().copy() if p.grad is not None else np.zeros(p.shape)
        )
    return float(loss.detach()), grads


def synthetic_two_block(
    seed: int,
    n_nodes: int = 60,
    n_edges: int = 40,
    size_range: tuple[int, int] = (3, 5),
    feat_dim: int = 8,
    noise: float = 1.0,
) -> tuple[Hypergraph, np.ndarray, np.ndarray]:
    """Two planted communities with class-pure hyperedges and noisy features."""
    rng = np.random.default_rng(seed)
    half = n_nodes // 2
    labels = np.array([0] * half + [1] * (n_nodes - half))
    groups = (np.arange(half), np.arange(half, n_nodes))
    edges = []
    for k in range(n_edges):
        cls = k % 2
        size = int(rng.integers(size_range[0], size_range[1] + 1))
        members = rng.choice(groups[cls], size=size, replace=False)
        edges.append(frozenset(int(v) for v in members))
    h = Hypergraph(
        tuple(f"n{i}" for i in range(n_nodes)),
        tuple(f"e{k}" for k in range(n_edges)),
        tuple(edges),
    )
    centers = np.zeros((2, feat_dim))
    centers[0, : feat_dim // 2] = 1.0
    centers[1, feat_dim // 2 :] = 1.0
    features = centers[labels] + noise * rng.standard_normal((n_nodes, feat_dim))
    return h, features, labels
