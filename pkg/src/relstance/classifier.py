"""Fusion classifier: subgraph relation features plus text features feed a
three-way softmax, trained with a stance cross-entropy term and a
reconstruction penalty that ties the projected relation feature back to the
raw subgraph average.

For each example the radius-1 induced subgraph around the two authors is
encoded, the node features are averaged into ``h_rg``, projected to ``h_r``,
and fused with the text vector by concatenation (or addition).  The encoder
is frozen by default; a fine-tune flag lets gradients flow back into the
autoencoder parameters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .gae import GaeConfig, GaeParams, encode_nodes
from .graph import RelationGraph, extract_subgraph
from .ingest import LABEL_INDEX, LABELS, InteractionRecord
from .metrics import compute_metrics
from .optim import Adam
from .textfeat import EmbeddingTable, hash_featurize

FUSION_MODES = ("concat", "add")

TextSource = EmbeddingTable | Callable[[InteractionRecord], np.ndarray] | None


class ClassifierError(ValueError):
    """Invalid classifier configuration or input."""


class MissingEmbeddings(ClassifierError):
    """Example ids without a vector in the embedding table."""

    def __init__(self, ids: Sequence[str]):
        self.ids = list(ids)
        preview = ", ".join(self.ids[:10])
        suffix = "..." if len(self.ids) > 10 else ""
        super().__init__(f"{len(self.ids)} example id(s) missing from table: {preview}{suffix}")


@dataclass
class ClassifierConfig:
    learning_rate: float = 1e-3
    epochs: int = 30
    batch_size: int = 8
    seed: int = 0
    lambda_recon: float = 1.0
    fusion_mode: str = "concat"
    d_rel_out: int = 64
    text_dim: int = 256  # hash featurizer width when no table is given
    radius: int = 1
    freeze_encoder: bool = True
    no_pretraining: bool = False
    use_relations: bool = True

    def __post_init__(self):
        if self.fusion_mode not in FUSION_MODES:
            raise ClassifierError(f"fusion_mode must be one of {FUSION_MODES}")
        if self.learning_rate <= 0:
            raise ClassifierError("learning rate must be positive")
        if self.batch_size <= 0:
            raise ClassifierError("batch size must be positive")


class ClassifierParams:
    """Relation projection, reconstruction decoder, and fusion softmax."""

    def __init__(
        self,
        d_text: int,
        d_rel: int,
        d_rel_out: int,
        fusion_mode: str,
        w_rel_proj: Tensor,
        b_rel_proj: Tensor,
        w_recon: Tensor,
        b_recon: Tensor,
        w_fuse: Tensor,
        b_fuse: Tensor,
    ):
        if fusion_mode == "add" and d_text != d_rel_out:
            raise ClassifierError(
                f"add fusion needs d_text == d_rel_out, got {d_text} vs {d_rel_out}"
            )
        self.d_text = d_text
        self.d_rel = d_rel
        self.d_rel_out = d_rel_out
        self.fusion_mode = fusion_mode
        self.w_rel_proj = w_rel_proj
        self.b_rel_proj = b_rel_proj
        self.w_recon = w_recon
        self.b_recon = b_recon
        self.w_fuse = w_fuse
        self.b_fuse = b_fuse

    @classmethod
    def init(cls, d_text: int, d_rel: int, cfg: ClassifierConfig) -> "ClassifierParams":
        rng = np.random.default_rng([cfg.seed, 5])
        dro = cfg.d_rel_out
        fuse_in = d_text + dro if cfg.fusion_mode == "concat" else d_text

        def glorot(shape):
            bound = math.sqrt(6.0 / sum(shape))
            return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)

        def zeros(n):
            return Tensor(np.zeros(n), requires_grad=True)

        return cls(
            d_text,
            d_rel,
            dro,
            cfg.fusion_mode,
            w_rel_proj=glorot((dro, d_rel)),
            b_rel_proj=zeros(dro),
            w_recon=glorot((d_rel, dro)),
            b_recon=zeros(d_rel),
            w_fuse=glorot((3, fuse_in)),
            b_fuse=zeros(3),
        )

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        return [
            ("w_rel_proj", self.w_rel_proj),
            ("b_rel_proj", self.b_rel_proj),
            ("w_recon", self.w_recon),
            ("b_recon", self.b_recon),
            ("w_fuse", self.w_fuse),
            ("b_fuse", self.b_fuse),
        ]

    def copy(self) -> "ClassifierParams":
        return ClassifierParams(
            self.d_text,
            self.d_rel,
            self.d_rel_out,
            self.fusion_mode,
            *(Tensor(t.data.copy(), requires_grad=True) for _, t in self.named_parameters()),
        )


# -- features ----------------------------------------------------------------

def _pair_feature(
    graph: RelationGraph, gae: GaeParams, a: int, b: int, radius: int = 1
) -> Tensor:
    """(1, d) average of the encoded radius-limited subgraph around {a, b}."""
    sub, remap = extract_subgraph(graph, a, b, radius)
    rows = sorted(remap)  # original node index per subgraph position
    h = encode_nodes(sub, gae, node_rows=np.array(rows, dtype=np.intp))
    return ad.tmean(h, axis=0, keepdims=True)


def relation_feature(
    graph: RelationGraph,
    gae: GaeParams,
    a: int,
    b: int,
    params: ClassifierParams,
    radius: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Subgraph-average feature ``h_rg`` and its linear projection ``h_r``."""
    h_rg = _pair_feature(graph, gae, a, b, radius).data[0]
    h_r = params.w_rel_proj.data @ h_rg + params.b_rel_proj.data
    return h_rg, h_r


def _fuse_np(params: ClassifierParams, h_text: np.ndarray, h_r: np.ndarray) -> np.ndarray:
    if h_text.shape[-1] != params.d_text:
        raise ClassifierError(f"text dim {h_text.shape[-1]} != expected {params.d_text}")
    if h_r.shape[-1] != params.d_rel_out:
        raise ClassifierError(f"relation dim {h_r.shape[-1]} != expected {params.d_rel_out}")
    if params.fusion_mode == "concat":
        return np.concatenate([h_text, h_r], axis=-1)
    return h_text + h_r


def predict(h_text: np.ndarray, h_r: np.ndarray, params: ClassifierParams) -> np.ndarray:
    """Class probability triple for one example (softmax over fused logits)."""
    x = _fuse_np(params, np.asarray(h_text, dtype=np.float64), np.asarray(h_r, dtype=np.float64))
    z = params.w_fuse.data @ x + params.b_fuse.data
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


# -- loss ------------------------------------------------------------------------

def _batch_loss(
    params: ClassifierParams,
    h_text: np.ndarray,
    h_rg: Tensor | None,
    golds: np.ndarray,
    lambda_recon: float,
) -> Tensor:
    """Stance cross-entropy plus lambda times the reconstruction penalty.

    ``h_rg`` of None means relation features are disabled: the relation block
    of the fusion input is zero and the reconstruction term is dropped.
    """
    n = len(golds)
    if h_rg is None:
        h_r = Tensor(np.zeros((n, params.d_rel_out)))
        lambda_recon = 0.0
    else:
        h_r = ad.add(ad.matmul(h_rg, ad.transpose(params.w_rel_proj)), params.b_rel_proj)

    text = Tensor(h_text)
    if params.fusion_mode == "concat":
        fused = ad.concat([text, h_r], axis=1)
    else:
        fused = ad.add(text, h_r)
    logits = ad.add(ad.matmul(fused, ad.transpose(params.w_fuse)), params.b_fuse)
    logp = ad.log_softmax(logits, axis=1)
    onehot = np.zeros((n, 3))
    onehot[np.arange(n), golds] = 1.0
    stance = ad.mul(ad.tmean(ad.tsum(ad.mul(logp, onehot), axis=1)), -1.0)
    if lambda_recon == 0.0:
        return stance
    recon_hat = ad.add(ad.matmul(h_r, ad.transpose(params.w_recon)), params.b_recon)
    recon = ad.tmean(ad.tsum(ad.square(ad.sub(recon_hat, h_rg)), axis=1))
    return ad.add(stance, ad.mul(recon, lambda_recon))


def training_loss(
    batch: Sequence[tuple[InteractionRecord, str]],
    params: ClassifierParams,
    gae: GaeParams,
    graph: RelationGraph,
    lambda_recon: float = 1.0,
    text_source: TextSource = None,
    fine_tune: bool = False,
    radius: int = 1,
) -> Tensor:
    """Loss over a batch of (record, gold label); ``backward()`` on the
    result fills gradients of the classifier parameters and, when
    ``fine_tune`` is set, of the autoencoder parameters."""
    if not batch:
        raise ClassifierError("empty batch")
    records = [r for r, _ in batch]
    golds = np.array([LABEL_INDEX[g] for _, g in batch])
    h_text = resolve_text_vectors(records, text_source, params.d_text)
    feats = ad.concat(
        [
            _pair_feature(
                graph, gae, graph.node_index(r.reply_author), graph.node_index(r.comment_author), radius
            )
            for r in records
        ],
        axis=0,
    )
    if not fine_tune:
        feats = Tensor(feats.data)
    return _batch_loss(params, h_text, feats, golds, lambda_recon)


# -- text resolution ----------------------------------------------------------------

def resolve_text_vectors(
    records: Sequence[InteractionRecord], text_source: TextSource, dim: int
) -> np.ndarray:
    """(n, dim) float64 text features from a table, a callable, or the
    built-in hash featurizer."""
    if isinstance(text_source, EmbeddingTable):
        missing = [r.id for r in records if r.id not in text_source]
        if missing:
            raise MissingEmbeddings(missing)
        if text_source.dim != dim:
            raise ClassifierError(f"table dim {text_source.dim} != expected {dim}")
        return np.stack([text_source.vector(r.id) for r in records]).astype(np.float64)
    if callable(text_source):
        return np.stack([np.asarray(text_source(r), dtype=np.float64) for r in records])
    return np.stack([hash_featurize(r.comment_text, r.reply_text, dim) for r in records])


# -- training ------------------------------------------------------------------------

def _pair_features_frozen(
    graph: RelationGraph,
    gae: GaeParams,
    records: Sequence[InteractionRecord],
    radius: int,
    cache: dict[tuple[int, int], np.ndarray],
) -> np.ndarray:
    out = np.empty((len(records), gae.d))
    for i, r in enumerate(records):
        key = (graph.node_index(r.reply_author), graph.node_index(r.comment_author))
        if key not in cache:
            cache[key] = _pair_feature(graph, gae, key[0], key[1], radius).data[0]
        out[i] = cache[key]
    return out


def _probs_np(params: ClassifierParams, h_text: np.ndarray, h_rg: np.ndarray | None) -> np.ndarray:
    if h_rg is None:
        h_r = np.zeros((h_text.shape[0], params.d_rel_out))
    else:
        h_r = h_rg @ params.w_rel_proj.data.T + params.b_rel_proj.data
    z = _fuse_np(params, h_text, h_r) @ params.w_fuse.data.T + params.b_fuse.data
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def train_classifier(
    split,
    graph: RelationGraph,
    gae: GaeParams,
    text_source: TextSource,
    cfg: ClassifierConfig,
) -> tuple[ClassifierParams, dict]:
    """Adaptive-moment training with per-epoch dev macro-F1 model selection.

    Returns the parameters from the best dev epoch and metadata including the
    dev trajectory and the autoencoder parameters in effect at that epoch
    (identical to the input when the encoder stays frozen).
    """
    train, dev = split.train, split.dev
    if not train or not dev:
        raise ClassifierError("train and dev splits must be non-empty")

    if cfg.no_pretraining:
        gae_work = GaeParams.init(
            gae.node_ids,
            GaeConfig(seed=cfg.seed, d=gae.d, decoder_kind=gae.decoder_kind),
        )
        freeze = False
    else:
        freeze = cfg.freeze_encoder
        gae_work = gae if freeze else gae.copy()

    if isinstance(text_source, EmbeddingTable):
        d_text = text_source.dim
    else:
        d_text = cfg.text_dim
    h_text_train = resolve_text_vectors(train, text_source, d_text)
    h_text_dev = resolve_text_vectors(dev, text_source, d_text)
    golds_train = np.array([LABEL_INDEX[r.label] for r in train])
    golds_dev = [r.label for r in dev]

    params = ClassifierParams.init(d_text, gae.d, cfg)

    cache: dict[tuple[int, int], np.ndarray] = {}
    use_rel = cfg.use_relations
    rg_train = rg_dev = None
    if use_rel and freeze:
        rg_train = _pair_features_frozen(graph, gae_work, train, cfg.radius, cache)
        rg_dev = _pair_features_frozen(graph, gae_work, dev, cfg.radius, cache)

    opt_params = [t for _, t in params.named_parameters()]
    if use_rel and not freeze:
        opt_params += [t for _, t in gae_work.named_parameters()]
    opt = Adam(opt_params, lr=cfg.learning_rate)

    best = (-1.0, 0)  # (dev macro-F1, epoch)
    best_params = params.copy()
    best_gae = gae_work if freeze else gae_work.copy()
    history: list[float] = []

    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, 10, epoch]).permutation(len(train))
        for lo in range(0, len(train), cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            opt.zero_grad()
            if not use_rel:
                h_rg = None
            elif freeze:
                h_rg = Tensor(rg_train[idx])
            else:
                h_rg = ad.concat(
                    [
                        _pair_feature(
                            graph,
                            gae_work,
                            graph.node_index(train[i].reply_author),
                            graph.node_index(train[i].comment_author),
                            cfg.radius,
                        )
                        for i in idx
                    ],
                    axis=0,
                )
            loss = _batch_loss(
                params,
                h_text_train[idx],
                h_rg,
                golds_train[idx],
                cfg.lambda_recon if use_rel else 0.0,
            )
            value = loss.item()
            if not math.isfinite(value):
                raise RuntimeError(f"non-finite classifier loss at epoch {epoch}")
            loss.backward()
            opt.step()

        if not use_rel:
            rg_dev_now = None
        elif freeze:
            rg_dev_now = rg_dev
        else:
            rg_dev_now = _pair_features_frozen(graph, gae_work, dev, cfg.radius, {})
        probs = _probs_np(params, h_text_dev, rg_dev_now)
        preds = [LABELS[i] for i in probs.argmax(axis=1)]
        macro = compute_metrics(preds, golds_dev).macro_f1
        history.append(macro)
        if macro > best[0]:
            best = (macro, epoch + 1)
            best_params = params.copy()
            best_gae = gae_work if freeze else gae_work.copy()

    if cfg.epochs == 0:
        best_params, best = params, (float("nan"), 0)

    return best_params, {
        "best_epoch": best[1],
        "best_dev_macro_f1": best[0],
        "dev_macro_f1_history": history,
        "gae": best_gae,
        "frozen_encoder": freeze,
    }


def predict_records(
    records: Sequence[InteractionRecord],
    graph: RelationGraph,
    gae: GaeParams,
    params: ClassifierParams,
    text_source: TextSource = None,
    radius: int = 1,
    use_relations: bool = True,
) -> tuple[list[str], np.ndarray]:
    """Predicted labels and (n, 3) probabilities for a record sequence."""
    h_text = resolve_text_vectors(records, text_source, params.d_text)
    h_rg = (
        _pair_features_frozen(graph, gae, records, radius, {}) if use_relations else None
    )
    probs = _probs_np(params, h_text, h_rg)
    return [LABELS[i] for i in probs.argmax(axis=1)], probs


def write_predictions(
    path: str | Path,
    records: Sequence[InteractionRecord],
    preds: Sequence[str],
    probs: np.ndarray,
) -> None:
    """Prediction dump: one JSON object {id, gold, pred, probs} per line."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for r, p, row in zip(records, preds, probs):
            fh.write(
                json.dumps(
                    {"id": r.id, "gold": r.label, "pred": p, "probs": [float(x) for x in row]},
                    sort_keys=True,
                )
                + "\n"
            )


# -- gradient verification ---------------------------------------------------------

def finite_diff_check(
    params: ClassifierParams,
    gae: GaeParams,
    graph: RelationGraph,
    batch: Sequence[tuple[InteractionRecord, str]],
    probe_count: int = 100,
    eps: float = 1e-5,
    seed: int = 0,
    lambda_recon: float = 1.0,
) -> float:
    """Central-difference check of the full classifier path with the encoder
    fine-tuned, so probes cover classifier and autoencoder parameters."""
    named = params.named_parameters() + gae.named_parameters()

    def loss_value() -> float:
        return training_loss(
            batch, params, gae, graph, lambda_recon, fine_tune=True
        ).item()

    for _, t in named:
        t.zero_grad()
    training_loss(batch, params, gae, graph, lambda_recon, fine_tune=True).backward()

    sizes = np.array([t.data.size for _, t in named])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = np.random.default_rng([seed, 8])
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


# -- checkpointing -------------------------------------------------------------------

def save_classifier(params: ClassifierParams, path: str | Path, extra: dict | None = None) -> None:
    doc = {
        "version": 1,
        "kind": "classifier",
        "d_text": params.d_text,
        "d_rel": params.d_rel,
        "d_rel_out": params.d_rel_out,
        "fusion_mode": params.fusion_mode,
        "arrays": {
            name: {"shape": list(t.data.shape), "data": t.data.ravel().tolist()}
            for name, t in params.named_parameters()
        },
    }
    if extra:
        doc["meta"] = extra
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_classifier(path: str | Path) -> ClassifierParams:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("kind") != "classifier":
        raise ClassifierError(f"not a classifier checkpoint: {path}")

    def arr(name: str) -> Tensor:
        entry = doc["arrays"][name]
        return Tensor(
            np.array(entry["data"], dtype=np.float64).reshape(entry["shape"]),
            requires_grad=True,
        )

    return ClassifierParams(
        doc["d_text"],
        doc["d_rel"],
        doc["d_rel_out"],
        doc["fusion_mode"],
        arr("w_rel_proj"),
        arr("b_rel_proj"),
        arr("w_recon"),
        arr("b_recon"),
        arr("w_fuse"),
        arr("b_fuse"),
    )
