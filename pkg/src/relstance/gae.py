"""Relational graph autoencoder over the social-relation graph.

The encoder is two stacked relational graph-convolution layers: each node
mixes its own features through a shared self matrix with the mean of its
incoming neighbors per relation type through relation-specific matrices
(rectifier after layer 1, identity after layer 2).  A pluggable decoder
scores triplets -- a diagonal bilinear form (``distmult``), a translation
with margin (``transe``), or circular correlation (``hole``) -- and training
is binary cross-entropy over observed triplets plus one uniform corruption
each, optimized with in-repo Adam.  Everything runs in float64 and is
bitwise reproducible for a fixed seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse

from . import autodiff as ad
from .autodiff import Tensor
from .graph import RELATIONS, RelationGraph, RelationType
from .optim import Adam

DECODER_KINDS = ("distmult", "transe", "hole")

Edge = tuple[int, RelationType, int]


class GaeError(ValueError):
    """Invalid autoencoder configuration or input."""


class TrainingDiverged(RuntimeError):
    """Raised when the loss becomes non-finite."""


@dataclass(frozen=True)
class Triplet:
    src: int
    relation: RelationType
    dst: int
    truth: bool


@dataclass
class GaeConfig:
    """Autoencoder training hyperparameters."""

    learning_rate: float = 1e-2
    epochs: int = 2000
    triplet_batch: int = 100_000
    edge_keep_fraction: float = 0.5
    seed: int = 0
    d: int = 64
    decoder_kind: str = "distmult"
    transe_margin: float = 1.0
    message_all_edges: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise GaeError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 < self.edge_keep_fraction <= 1.0:
            raise GaeError(f"edge_keep_fraction must be in (0, 1], got {self.edge_keep_fraction}")
        if self.decoder_kind not in DECODER_KINDS:
            raise GaeError(f"decoder_kind must be one of {DECODER_KINDS}, got {self.decoder_kind!r}")
        if self.d <= 0:
            raise GaeError(f"embedding dimension must be positive, got {self.d}")


class GaeParams:
    """Learnable state: node embeddings, layer weights, decoder vectors.

    Weight matrices follow the ``h = W @ x`` column convention; the decoder
    block is one (num_relations, d) matrix with one row per relation ordinal
    (DistMult diagonal / TransE translation / HolE relation vector).
    """

    def __init__(
        self,
        node_ids: Sequence[str],
        d: int,
        decoder_kind: str,
        node_embeddings: Tensor,
        w_self: list[Tensor],
        w_rel: list[dict[RelationType, Tensor]],
        decoder: Tensor,
        transe_margin: float = 1.0,
    ):
        self.node_ids = list(node_ids)
        self.d = d
        self.decoder_kind = decoder_kind
        self.node_embeddings = node_embeddings
        self.w_self = w_self
        self.w_rel = w_rel
        self.decoder = decoder
        self.transe_margin = transe_margin

    @classmethod
    def init(cls, node_ids: Sequence[str], cfg: GaeConfig) -> "GaeParams":
        """Seeded initialization: normal(0, 0.1) embeddings and decoder rows,
        Glorot-uniform layer weights.  Draw order is fixed."""
        rng = np.random.default_rng([cfg.seed, 1])
        d = cfg.d
        emb = Tensor(rng.normal(0.0, 0.1, size=(len(node_ids), d)), requires_grad=True)
        bound = math.sqrt(6.0 / (d + d))
        w_self, w_rel = [], []
        for _layer in range(2):
            w_self.append(Tensor(rng.uniform(-bound, bound, size=(d, d)), requires_grad=True))
            w_rel.append(
                {r: Tensor(rng.uniform(-bound, bound, size=(d, d)), requires_grad=True) for r in RELATIONS}
            )
        decoder = Tensor(rng.normal(0.0, 0.1, size=(len(RELATIONS), d)), requires_grad=True)
        return cls(node_ids, d, cfg.decoder_kind, emb, w_self, w_rel, decoder, cfg.transe_margin)

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = [("node_embeddings", self.node_embeddings)]
        for layer in range(2):
            out.append((f"w_self.{layer + 1}", self.w_self[layer]))
            for r in RELATIONS:
                out.append((f"w_rel.{layer + 1}.{r.label}", self.w_rel[layer][r]))
        out.append(("decoder", self.decoder))
        return out

    def copy(self) -> "GaeParams":
        return GaeParams(
            self.node_ids,
            self.d,
            self.decoder_kind,
            Tensor(self.node_embeddings.data.copy(), requires_grad=True),
            [Tensor(w.data.copy(), requires_grad=True) for w in self.w_self],
            [
                {r: Tensor(w.data.copy(), requires_grad=True) for r, w in layer.items()}
                for layer in self.w_rel
            ],
            Tensor(self.decoder.data.copy(), requires_grad=True),
            self.transe_margin,
        )


# -- encoder -----------------------------------------------------------------

def relation_adjacency(
    num_nodes: int, message_edges: Sequence[Edge]
) -> dict[RelationType, sparse.csr_matrix]:
    """Per-relation normalized incoming adjacency: A[i, j] = 1/|N_i^r| for
    each message edge j -r-> i.  Relations without edges are omitted."""
    buckets: dict[RelationType, list[tuple[int, int]]] = {}
    for src, rel, dst in message_edges:
        buckets.setdefault(rel, []).append((dst, src))
    out = {}
    for rel in RELATIONS:
        pairs = buckets.get(rel)
        if not pairs:
            continue
        rows = np.array([p[0] for p in pairs], dtype=np.intp)
        cols = np.array([p[1] for p in pairs], dtype=np.intp)
        indeg = np.bincount(rows, minlength=num_nodes).astype(np.float64)
        data = 1.0 / indeg[rows]
        out[rel] = sparse.csr_matrix((data, (rows, cols)), shape=(num_nodes, num_nodes))
    return out


def _encode(params: GaeParams, adjacency: dict[RelationType, sparse.csr_matrix], x: Tensor) -> Tensor:
    for layer in range(2):
        y = ad.matmul(x, ad.transpose(params.w_self[layer]))
        for rel, a in adjacency.items():
            y = ad.add(y, ad.matmul(ad.spmm(a, x), ad.transpose(params.w_rel[layer][rel])))
        x = ad.relu(y) if layer == 0 else y
    return x


def encode_nodes(
    graph: RelationGraph,
    params: GaeParams,
    message_edges: Sequence[Edge] | None = None,
    node_rows: np.ndarray | None = None,
) -> Tensor:
    """Two-layer relational encoding of every node in ``graph``.

    ``message_edges`` defaults to all graph edges.  For a subgraph forward,
    ``node_rows`` maps subgraph node indices to rows of the full embedding
    table (the gather keeps gradients flowing to the original rows).
    """
    if message_edges is None:
        message_edges = graph.edges
    if node_rows is None:
        if graph.num_nodes != params.node_embeddings.data.shape[0]:
            raise GaeError(
                f"graph has {graph.num_nodes} nodes but embeddings have "
                f"{params.node_embeddings.data.shape[0]} rows"
            )
        x = params.node_embeddings
    else:
        node_rows = np.asarray(node_rows, dtype=np.intp)
        if len(node_rows) != graph.num_nodes:
            raise GaeError("node_rows length must match the graph node count")
        x = ad.take_rows(params.node_embeddings, node_rows)
    adjacency = relation_adjacency(graph.num_nodes, message_edges)
    return _encode(params, adjacency, x)


# -- decoders ------------------------------------------------------------------

def raw_scores(
    params: GaeParams,
    h: Tensor,
    src: np.ndarray,
    rel: np.ndarray,
    dst: np.ndarray,
) -> Tensor:
    """Pre-sigmoid triplet scores for the configured decoder, batched."""
    hs = ad.take_rows(h, src)
    hd = ad.take_rows(h, dst)
    rv = ad.take_rows(params.decoder, rel)
    kind = params.decoder_kind
    if kind == "distmult":
        # (hs * hd) first: elementwise products commute bitwise, so the
        # score is exactly symmetric in its endpoints
        return ad.tsum(ad.mul(ad.mul(hs, hd), rv), axis=1)
    if kind == "transe":
        diff = ad.sub(ad.add(hs, rv), hd)
        dist = ad.sqrt(ad.tsum(ad.square(diff), axis=1))
        return ad.sub(params.transe_margin, dist)
    if kind == "hole":
        return ad.tsum(ad.mul(rv, ad.circ_corr(hs, hd)), axis=1)
    raise GaeError(f"unknown decoder kind {kind!r}")


def score_triplets(params: GaeParams, h: Tensor, triplets: Sequence[Triplet]) -> Tensor:
    src = np.array([t.src for t in triplets], dtype=np.intp)
    rel = np.array([int(t.relation) for t in triplets], dtype=np.intp)
    dst = np.array([t.dst for t in triplets], dtype=np.intp)
    return ad.sigmoid(raw_scores(params, h, src, rel, dst))


def score_triplet(params: GaeParams, h: Tensor, t: Triplet) -> float:
    """Probability that the triplet is a true edge, strictly inside (0, 1)."""
    s = score_triplets(params, h, [t]).data[0]
    return float(np.clip(s, 1e-15, 1.0 - 1e-15))


# -- negative sampling ------------------------------------------------------------

def supervision_subsample(graph: RelationGraph, cfg: GaeConfig) -> list[int]:
    """Seeded fixed subsample of supervision edge indices (the incomplete
    input set).  Uses ``edge_keep_fraction`` of the edges, at least one."""
    n = len(graph.edges)
    if n == 0:
        raise GaeError("graph has no supervision edges")
    keep = max(1, int(cfg.edge_keep_fraction * n))
    rng = np.random.default_rng([cfg.seed, 2])
    perm = rng.permutation(n)
    return sorted(int(i) for i in perm[:keep])


def _corrupt(
    rng: np.random.Generator,
    edge: Edge,
    num_nodes: int,
    known: set[tuple[int, int, int]],
) -> Triplet:
    src, rel, dst = edge
    slot = int(rng.integers(3))
    candidate = (src, int(rel), dst)
    for _ in range(100):
        if slot == 0:
            v = int(rng.integers(num_nodes - 1))
            candidate = (v + 1 if v >= src else v, int(rel), dst)
        elif slot == 1:
            v = int(rng.integers(num_nodes - 1))
            candidate = (src, int(rel), v + 1 if v >= dst else v)
        else:
            others = [r for r in RELATIONS if r is not rel]
            candidate = (src, int(others[int(rng.integers(len(others)))]), dst)
        if candidate not in known:
            break
    return Triplet(candidate[0], RelationType(candidate[1]), candidate[2], False)


def build_training_triplets(graph: RelationGraph, cfg: GaeConfig, epoch: int) -> list[Triplet]:
    """The per-epoch sample set U: every subsampled true triplet paired with
    one corruption (a uniformly chosen slot resampled over the alternative
    values, rejecting known edges for up to 100 retries)."""
    keep_idx = supervision_subsample(graph, cfg)
    known = graph.triplet_set()
    rng = np.random.default_rng([cfg.seed, 3, epoch])
    positives, negatives = [], []
    for i in keep_idx:
        src, rel, dst = graph.edges[i]
        positives.append(Triplet(src, rel, dst, True))
        negatives.append(_corrupt(rng, graph.edges[i], graph.num_nodes, known))
    return positives + negatives


def gae_loss(scores: Tensor, truths: np.ndarray) -> Tensor:
    """Binary cross-entropy, normalized by |U| = 2|E-hat|, log args clamped
    at 1e-12."""
    truths = np.asarray(truths, dtype=np.float64)
    if truths.size == 0:
        raise GaeError("empty triplet set")
    log_s = ad.log(ad.clamp_min(scores, 1e-12))
    log_not = ad.log(ad.clamp_min(ad.sub(1.0, scores), 1e-12))
    terms = ad.add(ad.mul(truths, log_s), ad.mul(1.0 - truths, log_not))
    return ad.mul(ad.tmean(terms), -1.0)


# -- training ------------------------------------------------------------------

def message_edge_indices(graph: RelationGraph, cfg: GaeConfig) -> list[int]:
    """Edges visible to the encoder during pretraining: the supervision
    subsample plus every interaction edge (or all edges behind the flag)."""
    if cfg.message_all_edges:
        return list(range(len(graph.edges)))
    idx = set(supervision_subsample(graph, cfg))
    idx.update(i for i, e in enumerate(graph.edges) if e[1] is RelationType.INTERACTION)
    return sorted(idx)


def train_gae(graph: RelationGraph, cfg: GaeConfig) -> tuple[GaeParams, dict]:
    """Pretrain the autoencoder; returns parameters and loss metadata."""
    params = GaeParams.init(graph.node_ids, cfg)
    if cfg.epochs == 0:
        return params, {"loss_history": [], "final_loss": None, "epochs": 0}

    msg_idx = message_edge_indices(graph, cfg)
    message_edges = [graph.edges[i] for i in msg_idx]
    adjacency = relation_adjacency(graph.num_nodes, message_edges)
    opt = Adam([t for _, t in params.named_parameters()], lr=cfg.learning_rate)

    history: list[float] = []
    for epoch in range(cfg.epochs):
        u = build_training_triplets(graph, cfg, epoch)
        truths = np.array([t.truth for t in u], dtype=bool)
        epoch_loss = 0.0
        for lo in range(0, len(u), cfg.triplet_batch):
            chunk = u[lo : lo + cfg.triplet_batch]
            opt.zero_grad()
            h = _encode(params, adjacency, params.node_embeddings)
            scores = score_triplets(params, h, chunk)
            loss = gae_loss(scores, truths[lo : lo + cfg.triplet_batch])
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingDiverged(f"non-finite autoencoder loss at epoch {epoch}")
            loss.backward()
            opt.step()
            epoch_loss += value * len(chunk)
        history.append(epoch_loss / len(u))

    return params, {
        "loss_history": history,
        "final_loss": history[-1],
        "epochs": cfg.epochs,
        "supervision_edges": len(supervision_subsample(graph, cfg)),
        "message_edges": len(message_edges),
    }


def heldout_link_accuracy(graph: RelationGraph, params: GaeParams, cfg: GaeConfig) -> float:
    """Threshold-0.5 classification accuracy on the edges left out of the
    supervision subsample, against one fresh corruption per held-out edge."""
    keep = set(supervision_subsample(graph, cfg))
    held = [graph.edges[i] for i in range(len(graph.edges)) if i not in keep]
    if not held:
        raise GaeError("no held-out edges; lower edge_keep_fraction")
    known = graph.triplet_set()
    rng = np.random.default_rng([cfg.seed, 4])
    triplets = [Triplet(s, r, d, True) for s, r, d in held]
    triplets += [_corrupt(rng, e, graph.num_nodes, known) for e in held]

    msg_idx = message_edge_indices(graph, cfg)
    h = encode_nodes(graph, params, message_edges=[graph.edges[i] for i in msg_idx])
    scores = score_triplets(params, h, triplets).data
    truths = np.array([t.truth for t in triplets])
    return float(np.mean((scores > 0.5) == truths))


# -- gradient verification --------------------------------------------------------

def probe_params(node_ids: Sequence[str], cfg: GaeConfig, scale: float = 2.0) -> GaeParams:
    """Seeded parameters scaled up for gradient probing.

    At the training init scale many coordinates carry gradients below the
    float64 central-difference noise floor (|loss| * eps_machine / step);
    probing at 2x keeps the loss surface smooth while lifting gradient
    magnitudes clear of that floor.
    """
    params = GaeParams.init(node_ids, cfg)
    for _, t in params.named_parameters():
        t.data = t.data * scale
    return params


def finite_diff_check(
    params: GaeParams,
    graph: RelationGraph,
    probe_count: int = 100,
    eps: float = 1e-5,
    seed: int = 0,
) -> float:
    """Compare analytic gradients of the pretraining loss against central
    differences on random coordinates; returns the max relative error."""
    cfg = GaeConfig(
        edge_keep_fraction=1.0,
        seed=seed,
        d=params.d,
        decoder_kind=params.decoder_kind,
        transe_margin=params.transe_margin,
    )
    u = build_training_triplets(graph, cfg, epoch=0)
    truths = np.array([t.truth for t in u], dtype=bool)
    adjacency = relation_adjacency(graph.num_nodes, graph.edges)

    def loss_value() -> float:
        h = _encode(params, adjacency, params.node_embeddings)
        return gae_loss(score_triplets(params, h, u), truths).item()

    named = params.named_parameters()
    for _, t in named:
        t.zero_grad()
    h = _encode(params, adjacency, params.node_embeddings)
    gae_loss(score_triplets(params, h, u), truths).backward()

    sizes = np.array([t.data.size for _, t in named])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = np.random.default_rng([seed, 7])
    picks = rng.integers(offsets[-1], size=probe_count)

    worst = 0.0
    for flat in picks:
        which = int(np.searchsorted(offsets, flat, side="right") - 1)
        tensor = named[which][1]
        idx = int(flat - offsets[which])
        orig = tensor.data.flat[idx]
        tensor.data.flat[idx] = orig + eps
        f_plus = loss_value()
        tensor.data.flat[idx] = orig - eps
        f_minus = loss_value()
        tensor.data.flat[idx] = orig
        numeric = (f_plus - f_minus) / (2.0 * eps)
        analytic = tensor.grad.flat[idx]
        worst = max(worst, abs(analytic - numeric) / max(1e-8, abs(numeric)))
    return worst


# -- checkpointing ---------------------------------------------------------------

def save_checkpoint(params: GaeParams, path: str | Path, rng_seed: int = 0, extra: dict | None = None) -> None:
    doc = {
        "version": 1,
        "kind": "gae",
        "d": params.d,
        "decoder_kind": params.decoder_kind,
        "transe_margin": params.transe_margin,
        "relation_names": [r.label for r in RELATIONS],
        "node_index_map": params.node_ids,
        "rng_seed": rng_seed,
        "arrays": {
            name: {"shape": list(t.data.shape), "data": t.data.ravel().tolist()}
            for name, t in params.named_parameters()
        },
    }
    if extra:
        doc["meta"] = extra
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_checkpoint(path: str | Path) -> GaeParams:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("kind") != "gae":
        raise GaeError(f"not an autoencoder checkpoint: {path}")

    def arr(name: str) -> Tensor:
        entry = doc["arrays"][name]
        return Tensor(
            np.array(entry["data"], dtype=np.float64).reshape(entry["shape"]),
            requires_grad=True,
        )

    return GaeParams(
        node_ids=doc["node_index_map"],
        d=doc["d"],
        decoder_kind=doc["decoder_kind"],
        node_embeddings=arr("node_embeddings"),
        w_self=[arr(f"w_self.{layer}") for layer in (1, 2)],
        w_rel=[{r: arr(f"w_rel.{layer}.{r.label}") for r in RELATIONS} for layer in (1, 2)],
        decoder=arr("decoder"),
        transe_margin=doc.get("transe_margin", 1.0),
    )
