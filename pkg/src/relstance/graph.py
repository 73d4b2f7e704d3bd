"""Typed social-relation graph built from temporally ordered interactions.

Each interaction contributes a signed entry (agree=+1, disagree=-1,
neutral=0) to a per-window snapshot keyed ``reply_author -> comment_author``
(the stance holder is the reply author).  Snapshots sum into aggregate
weights, and the sign of the sum types the edge: positive -> supporter,
negative -> opponent, zero with signed history -> acquaintance.  Pairs whose
relation must stay hidden (held-out examples, or training edges retyped at
rate rho) carry the type-erased *interaction* relation instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ingest import LABEL_SIGN, InteractionRecord

PER_EDGE = None  # sentinel: one snapshot per interaction


class GraphError(ValueError):
    """Invalid graph construction or lookup."""


class RelationType(IntEnum):
    """Edge types; ordinals are fixed for checkpoint stability."""

    SUPPORTER = 0
    OPPONENT = 1
    ACQUAINTANCE = 2
    INTERACTION = 3

    @property
    def label(self) -> str:
        return self.name.lower()


RELATIONS = tuple(RelationType)


@dataclass
class Snapshot:
    """Signed adjacency over one time window: (src, dst) -> {-1, 0, +1}."""

    window_index: int
    entries: dict[tuple[str, str], int] = field(default_factory=dict)


class RelationGraph:
    """Directed typed graph over authors with at most one edge per pair."""

    def __init__(
        self,
        node_ids: Sequence[str],
        edges: Iterable[tuple[int, RelationType, int]] = (),
        aggregate_weights: dict[tuple[int, int], int] | None = None,
        meta: dict | None = None,
        retyped: dict[tuple[int, int], RelationType] | None = None,
    ):
        self.node_ids: list[str] = list(node_ids)
        self.nodes: dict[str, int] = {a: i for i, a in enumerate(self.node_ids)}
        if len(self.nodes) != len(self.node_ids):
            raise GraphError("duplicate author ids in node list")
        self.edges: list[tuple[int, RelationType, int]] = []
        self.aggregate_weights: dict[tuple[int, int], int] = dict(aggregate_weights or {})
        self.meta: dict = dict(meta or {})
        # original relation per pair that was re-typed to INTERACTION
        self.retyped: dict[tuple[int, int], RelationType] = dict(retyped or {})
        self._by_pair: dict[tuple[int, int], RelationType] = {}
        for src, rel, dst in edges:
            self.add_edge(src, rel, dst)

    # -- construction ------------------------------------------------------
    def add_edge(self, src: int, rel: RelationType, dst: int) -> None:
        n = len(self.node_ids)
        if not (0 <= src < n and 0 <= dst < n):
            raise GraphError(f"edge ({src}, {rel}, {dst}) references unregistered node")
        if src == dst:
            raise GraphError(f"self-loop on node {src} is not allowed")
        if (src, dst) in self._by_pair:
            raise GraphError(f"duplicate edge for pair ({src}, {dst})")
        rel = RelationType(rel)
        w = self.aggregate_weights.get((src, dst))
        if w is not None and rel is not RelationType.INTERACTION:
            if (rel is RelationType.SUPPORTER and w <= 0) or (
                rel is RelationType.OPPONENT and w >= 0
            ) or (rel is RelationType.ACQUAINTANCE and w != 0):
                raise GraphError(f"edge type {rel.label} inconsistent with weight {w}")
        self._by_pair[(src, dst)] = rel
        self.edges.append((src, rel, dst))

    # -- queries -------------------------------------------------------------
    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    def node_index(self, author: str) -> int:
        try:
            return self.nodes[author]
        except KeyError:
            raise GraphError(f"unknown author {author!r}") from None

    def edge_type(self, src: int, dst: int) -> RelationType | None:
        return self._by_pair.get((src, dst))

    def triplet_set(self) -> set[tuple[int, int, int]]:
        return {(s, int(r), d) for s, r, d in self.edges}

    def edges_of_type(self, rel: RelationType) -> list[tuple[int, RelationType, int]]:
        return [e for e in self.edges if e[1] is rel]

    def undirected_adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for src, _, dst in self.edges:
            adj[src].append(dst)
            adj[dst].append(src)
        return adj

    # -- serialization -------------------------------------------------------
    def to_json_dict(self) -> dict:
        return {
            "nodes": self.node_ids,
            "edges": [[s, int(r), d] for s, r, d in self.edges],
            "aggregate_weights": [[s, d, w] for (s, d), w in sorted(self.aggregate_weights.items())],
            "meta": {
                **self.meta,
                "retyped": [[s, d, int(r)] for (s, d), r in sorted(self.retyped.items())],
            },
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), sort_keys=True), encoding="utf-8")

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RelationGraph":
        meta = dict(doc.get("meta", {}))
        retyped = {(s, d): RelationType(r) for s, d, r in meta.pop("retyped", [])}
        return cls(
            node_ids=doc["nodes"],
            edges=[(s, RelationType(r), d) for s, r, d in doc["edges"]],
            aggregate_weights={(s, d): w for s, d, w in doc.get("aggregate_weights", [])},
            meta=meta,
            retyped=retyped,
        )

    @classmethod
    def load(cls, path: str | Path) -> "RelationGraph":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# -- snapshots ----------------------------------------------------------------

def _majority_sign(pos: int, neg: int, zero: int) -> int:
    """Most frequent opinion with conservative ties.

    An agree/disagree tie yields 0; a tie between neutral and a signed
    opinion keeps the signed opinion.
    """
    if pos > neg:
        return 0 if zero > pos else 1
    if neg > pos:
        return 0 if zero > neg else -1
    return 0


def build_snapshots(
    records: Sequence[InteractionRecord], tau: float | None = PER_EDGE
) -> list[Snapshot]:
    """Bucket interactions into signed per-window adjacencies.

    ``tau=PER_EDGE`` (default) emits one snapshot per record.  A finite
    ``tau`` buckets records into windows ``[k*tau, (k+1)*tau)`` anchored at
    the earliest timestamp; within a window each ordered pair takes its most
    frequent opinion.  Self-replies never produce entries.
    """
    if tau is not PER_EDGE and tau <= 0:
        raise GraphError(f"tau must be positive, got {tau}")
    if not records:
        return []

    if tau is PER_EDGE:
        snaps = []
        for k, r in enumerate(records):
            entries = {}
            if r.reply_author != r.comment_author:
                entries[(r.reply_author, r.comment_author)] = LABEL_SIGN[r.label]
            snaps.append(Snapshot(window_index=k, entries=entries))
        return snaps

    t0 = min(r.timestamp for r in records)
    counts: dict[int, dict[tuple[str, str], list[int]]] = {}
    for r in records:
        if r.reply_author == r.comment_author:
            continue
        k = int((r.timestamp - t0) // tau)
        pair = (r.reply_author, r.comment_author)
        bucket = counts.setdefault(k, {})
        tally = bucket.setdefault(pair, [0, 0, 0])  # [pos, neg, zero]
        sign = LABEL_SIGN[r.label]
        tally[0 if sign > 0 else 1 if sign < 0 else 2] += 1

    snaps = []
    for k in sorted(counts):
        entries = {
            pair: _majority_sign(*tally) for pair, tally in counts[k].items()
        }
        snaps.append(Snapshot(window_index=k, entries=entries))
    return snaps


def aggregate_relations(
    snapshots: Sequence[Snapshot], extra_authors: Iterable[str] = ()
) -> RelationGraph:
    """Sum snapshots into aggregate weights and type the edges.

    Per ordered pair: supporter if the sum is positive, opponent if negative,
    acquaintance if zero while some window was signed; pairs with only zero
    entries get no edge.  ``extra_authors`` registers nodes (e.g. self-reply
    authors) that never appear in a snapshot entry.
    """
    node_ids: list[str] = []
    index: dict[str, int] = {}

    def register(author: str) -> int:
        if author not in index:
            index[author] = len(node_ids)
            node_ids.append(author)
        return index[author]

    for a in extra_authors:
        register(a)

    totals: dict[tuple[int, int], int] = {}
    signed: set[tuple[int, int]] = set()
    pair_order: list[tuple[int, int]] = []
    for snap in snapshots:
        for (src, dst), value in snap.entries.items():
            if src == dst:
                raise GraphError(f"snapshot {snap.window_index} has a self-loop entry")
            if value not in (-1, 0, 1):
                raise GraphError(f"snapshot value {value!r} outside {{-1, 0, +1}}")
            key = (register(src), register(dst))
            if key not in totals:
                totals[key] = 0
                pair_order.append(key)
            totals[key] += value
            if value != 0:
                signed.add(key)

    graph = RelationGraph(node_ids=node_ids)
    for key in pair_order:
        total = totals[key]
        if total > 0:
            rel = RelationType.SUPPORTER
        elif total < 0:
            rel = RelationType.OPPONENT
        elif key in signed:
            rel = RelationType.ACQUAINTANCE
        else:
            continue  # only-neutral history: no edge
        graph.aggregate_weights[key] = total
        graph.add_edge(key[0], rel, key[1])
    return graph


def build_graph(
    records: Sequence[InteractionRecord], tau: float | None = PER_EDGE
) -> RelationGraph:
    """Snapshot + aggregate in one step, registering every record author."""
    authors: list[str] = []
    seen: set[str] = set()
    for r in records:
        for a in (r.comment_author, r.reply_author):
            if a not in seen:
                seen.add(a)
                authors.append(a)
    graph = aggregate_relations(build_snapshots(records, tau), extra_authors=authors)
    graph.meta["tau"] = tau
    return graph


# -- interaction edges ---------------------------------------------------------

def inject_interaction_edges(
    graph: RelationGraph,
    heldout_pairs: Sequence[tuple[str, str]],
    rho: float,
    seed: int,
) -> RelationGraph:
    """Return a new graph with type-erased *interaction* edges added.

    Every held-out ordered author pair that is not already an edge gains an
    interaction edge (unknown authors are registered as new nodes); pairs
    already edged keep their trained type.  Each training edge is then
    independently retyped to interaction with probability ``rho``; the
    original types are kept in ``retyped`` so the autoencoder can exclude
    them from supervision under their old type.
    """
    if not 0.0 <= rho <= 1.0:
        raise GraphError(f"rho must be in [0, 1], got {rho}")

    node_ids = list(graph.node_ids)
    index = dict(graph.nodes)

    def register(author: str) -> int:
        if author not in index:
            index[author] = len(node_ids)
            node_ids.append(author)
        return index[author]

    rng = np.random.default_rng([seed, 0x1E])
    retyped: dict[tuple[int, int], RelationType] = dict(graph.retyped)
    new_edges: list[tuple[int, RelationType, int]] = []
    for src, rel, dst in graph.edges:
        if rel is not RelationType.INTERACTION and rng.random() < rho:
            retyped[(src, dst)] = rel
            new_edges.append((src, RelationType.INTERACTION, dst))
        else:
            new_edges.append((src, rel, dst))

    existing = {(s, d) for s, _, d in new_edges}
    for a, b in heldout_pairs:
        # registering both endpoints keeps self-reply authors on the graph
        sa, sb = register(a), register(b)
        if a == b or (sa, sb) in existing:
            continue
        existing.add((sa, sb))
        new_edges.append((sa, RelationType.INTERACTION, sb))

    out = RelationGraph(
        node_ids=node_ids,
        edges=new_edges,
        aggregate_weights=dict(graph.aggregate_weights),
        meta={**graph.meta, "rho": rho, "seed": seed},
        retyped=retyped,
    )
    return out


# -- subgraphs -----------------------------------------------------------------

def extract_subgraph(
    graph: RelationGraph, a: int, b: int, radius: int = 1
) -> tuple[RelationGraph, dict[int, int]]:
    """Induced subgraph around nodes ``a`` and ``b``.

    The node set is {a, b} plus everything reachable within ``radius`` hops
    ignoring edge direction; edges are all graph edges with both endpoints
    inside.  Returns the subgraph (indices remapped densely, ordered by
    original index) and the original->subgraph index map.
    """
    n = graph.num_nodes
    for x in (a, b):
        if not 0 <= x < n:
            raise GraphError(f"unknown author index {x}")
    keep = {a, b}
    frontier = [a, b] if a != b else [a]
    adj = graph.undirected_adjacency()
    for _ in range(radius):
        nxt = []
        for node in frontier:
            for nb in adj[node]:
                if nb not in keep:
                    keep.add(nb)
                    nxt.append(nb)
        frontier = nxt
        if not frontier:
            break

    ordered = sorted(keep)
    remap = {orig: i for i, orig in enumerate(ordered)}
    sub = RelationGraph(node_ids=[graph.node_ids[i] for i in ordered])
    for src, rel, dst in graph.edges:
        if src in remap and dst in remap:
            key = (remap[src], remap[dst])
            if (src, dst) in graph.aggregate_weights:
                sub.aggregate_weights[key] = graph.aggregate_weights[(src, dst)]
            sub.add_edge(key[0], rel, key[1])
    return sub, remap
