"""Hypergraph data model: parsing, validation, labeled equality, clique expansion.

A hypergraph is a node sequence plus a sequence of hyperedges, each labeled
with a node subset of size >= 2.  Node identifiers may be strings or
integers; they are mapped to dense indices once, and everything downstream
works with indices.  Parallel hyperedges (equal labels under distinct
identifiers) are legal and preserved.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from functools import cached_property

NodeId = str | int


class HypergraphError(ValueError):
    """Malformed hypergraph input or violated structural invariant."""


@dataclass(frozen=True)
class Hypergraph:
    """Immutable hypergraph over densely indexed nodes.

    Attributes
    ----------
    nodes:
        Node identifiers in declaration order; position is the dense index.
    edge_ids:
        Hyperedge identifiers in declaration order.
    edges:
        One frozenset of node indices per hyperedge, aligned with edge_ids.
    """

    nodes: tuple[NodeId, ...]
    edge_ids: tuple[str, ...]
    edges: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        if len(set(self.nodes)) != len(self.nodes):
            raise HypergraphError("duplicate node identifier")
        if len(set(self.edge_ids)) != len(self.edge_ids):
            raise HypergraphError("duplicate hyperedge identifier")
        if len(self.edge_ids) != len(self.edges):
            raise HypergraphError("edge_ids and edges must have equal length")
        n = len(self.nodes)
        for eid, label in zip(self.edge_ids, self.edges):
            if len(label) < 2:
                raise HypergraphError(
                    f"hyperedge {eid!r} has {len(label)} node(s); labels need at least two"
                )
            for v in label:
                if not isinstance(v, int) or not 0 <= v < n:
                    raise HypergraphError(f"hyperedge {eid!r} references unknown node index {v!r}")

    @cached_property
    def node_index(self) -> dict[NodeId, int]:
        return {v: i for i, v in enumerate(self.nodes)}

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def dimension(self, e: int) -> int:
        """Dimension of hyperedge e: one less than its label size."""
        return len(self.edges[e]) - 1

    @property
    def max_dimension(self) -> int:
        return max((len(label) - 1 for label in self.edges), default=0)

    @property
    def is_graph(self) -> bool:
        return all(len(label) == 2 for label in self.edges)

    def label_ids(self, e: int) -> frozenset[NodeId]:
        """Hyperedge label as a set of node identifiers instead of indices."""
        return frozenset(self.nodes[v] for v in self.edges[e])


def parse_hypergraph(text: str) -> Hypergraph:
    """Parse hypergraph text in either the line format or the JSON format.

    Line format: optional first line ``#nodes <count>`` declaring nodes
    0..count-1 (this is how isolated nodes enter); every other nonempty line
    is one hyperedge as whitespace-separated node tokens; ``#`` starts a
    comment.  Without a header, node identifiers are the tokens themselves
    in first-appearance order.

    JSON format: an object ``{"nodes": [...], "edges": [[...], ...]}``.
    """
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return _parse_json(text)
    return _parse_text(text)


def _parse_json(text: str) -> Hypergraph:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise HypergraphError(f"invalid JSON hypergraph: {exc}") from exc
    if not isinstance(obj, dict) or "nodes" not in obj or "edges" not in obj:
        raise HypergraphError('JSON hypergraph needs "nodes" and "edges" fields')
    if not isinstance(obj["nodes"], list) or not isinstance(obj["edges"], list):
        raise HypergraphError('"nodes" and "edges" must be JSON arrays')
    nodes = list(obj["nodes"])
    index: dict[NodeId, int] = {}
    for i, v in enumerate(nodes):
        if v in index:
            raise HypergraphError(f"duplicate node identifier {v!r}")
        index[v] = i
    edges = []
    for k, raw in enumerate(obj["edges"]):
        if not isinstance(raw, list):
            raise HypergraphError(f"edge {k} must be a JSON array of node ids")
        members = set()
        for v in raw:
            if v not in index:
                raise HypergraphError(f"edge {k} references unknown node id {v!r}")
            members.add(index[v])
        if len(members) < 2:
            raise HypergraphError(f"edge {k} has fewer than two distinct nodes")
        edges.append(frozenset(members))
    edge_ids = tuple(f"e{k}" for k in range(len(edges)))
    return Hypergraph(tuple(nodes), edge_ids, tuple(edges))


def _parse_text(text: str) -> Hypergraph:
    lines = text.splitlines()
    declared: int | None = None
    start = 0
    for i, raw in enumerate(lines):
        if raw.strip():
            if raw.strip().startswith("#nodes"):
                parts = raw.strip().split()
                if len(parts) != 2 or parts[0] != "#nodes" or not parts[1].isdigit():
                    raise HypergraphError(f"malformed header line: {raw.strip()!r}")
                declared = int(parts[1])
                start = i + 1
            break

    nodes: list[NodeId]
    index: dict[NodeId, int]
    if declared is not None:
        nodes = list(range(declared))
        index = {v: v for v in nodes}
    else:
        nodes, index = [], {}

    edges: list[frozenset[int]] = []
    for lineno, raw in enumerate(lines[start:], start=start + 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        members = set()
        for tok in line.split():
            if declared is not None:
                try:
                    v = int(tok)
                except ValueError:
                    raise HypergraphError(f"line {lineno}: non-integer node id {tok!r}") from None
                if not 0 <= v < declared:
                    raise HypergraphError(f"line {lineno}: unknown node id {tok!r}")
                members.add(v)
            else:
                if tok not in index:
                    index[tok] = len(nodes)
                    nodes.append(tok)
                members.add(index[tok])
        if len(members) < 2:
            raise HypergraphError(f"line {lineno}: hyperedge has fewer than two distinct nodes")
        edges.append(frozenset(members))
    edge_ids = tuple(f"e{k}" for k in range(len(edges)))
    return Hypergraph(tuple(nodes), edge_ids, tuple(edges))


def serialize_hypergraph(h: Hypergraph) -> str:
    """Serialize to the JSON format; parse(serialize(h)) == h for parsed h.

    Edge identifiers are positional (``e0``, ``e1``, ...), so the round trip
    is the identity whenever h itself came out of parse_hypergraph.
    """
    payload = {
        "nodes": list(h.nodes),
        "edges": [[h.nodes[v] for v in sorted(label)] for label in h.edges],
    }
    return json.dumps(payload)


def labeled_equal(h1: Hypergraph, h2: Hypergraph) -> bool:
    """True iff node sets agree and the label multisets coincide.

    Labels are compared as sets of node identifiers, counted with
    multiplicity so parallel hyperedges must match one for one.
    """
    if set(h1.nodes) != set(h2.nodes):
        return False
    c1 = Counter(h1.label_ids(e) for e in range(h1.n_edges))
    c2 = Counter(h2.label_ids(e) for e in range(h2.n_edges))
    return c1 == c2


def clique_expansion_multigraph(h: Hypergraph) -> dict[tuple[int, int], int]:
    """Co-membership counts: weight[(v, w)] = number of hyperedges containing both.

    Returned for both orders of each pair, so the mapping is symmetric by
    construction; weights are bounded by the number of hyperedges.
    """
    weights: Counter[tuple[int, int]] = Counter()
    for label in h.edges:
        members = sorted(label)
        for a_pos, v in enumerate(members):
            for w in members[a_pos + 1 :]:
                weights[(v, w)] += 1
                weights[(w, v)] += 1
    return dict(weights)
