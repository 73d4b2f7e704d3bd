"""In-domain and cross-domain experimental protocols.

Each run is an independent seeded pipeline: temporal split, graph build from
training records only, interaction-edge injection for held-out pairs,
autoencoder pretraining, classifier training, and evaluation.  The harness
accepts a seed list and reports mean and standard deviation across runs.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifier import ClassifierConfig, predict_records, train_classifier
from .config import RunConfig
from .gae import GaeConfig, train_gae
from .graph import RelationType, build_graph, inject_interaction_edges
from .ingest import DatasetSplit, InteractionRecord, temporal_split
from .metrics import bucket_by_length, compute_metrics
from .textfeat import load_embedding_table


class ProtocolError(ValueError):
    """Protocol misuse (e.g. cross-domain with a single topic)."""


def _gae_config(config: RunConfig, seed: int) -> GaeConfig:
    return GaeConfig(
        learning_rate=config.gae_lr,
        epochs=config.gae_epochs,
        triplet_batch=config.triplet_batch,
        edge_keep_fraction=config.edge_keep_fraction,
        seed=seed,
        d=config.d,
        decoder_kind=config.decoder_kind,
        transe_margin=config.transe_margin,
        message_all_edges=config.message_all_edges,
    )


def _clf_config(config: RunConfig, seed: int) -> ClassifierConfig:
    return ClassifierConfig(
        learning_rate=config.clf_lr,
        epochs=config.clf_epochs,
        batch_size=config.batch_size,
        seed=seed,
        lambda_recon=config.lambda_recon,
        fusion_mode=config.fusion_mode,
        d_rel_out=config.d_rel_out,
        text_dim=config.text_dim,
        radius=config.radius,
        freeze_encoder=config.freeze_encoder,
        no_pretraining=config.no_pretraining,
        use_relations=config.use_relations,
    )


def _text_source(config: RunConfig):
    return load_embedding_table(config.table) if config.table else None


def run_pipeline(
    split: DatasetSplit,
    test: Sequence[InteractionRecord],
    config: RunConfig,
    seed: int,
) -> dict:
    """One seeded pipeline over a prepared split; returns a JSON-able run
    document with metrics, per-topic/length breakdowns, and an audit of what
    was trained on."""
    train_graph = build_graph(split.train, tau=config.tau)
    heldout = [(r.reply_author, r.comment_author) for r in (*split.dev, *test)]
    graph = inject_interaction_edges(train_graph, heldout, config.rho, seed)

    gae_params, gae_meta = train_gae(graph, _gae_config(config, seed))
    text_source = _text_source(config)
    clf_params, clf_meta = train_classifier(
        split, graph, gae_params, text_source, _clf_config(config, seed)
    )

    preds, probs = predict_records(
        test,
        graph,
        clf_meta["gae"],
        clf_params,
        text_source,
        radius=config.radius,
        use_relations=config.use_relations,
    )
    golds = [r.label for r in test]
    overall = compute_metrics(preds, golds, key="overall")
    topics = sorted({r.topic for r in test})
    per_topic = {}
    for t in topics:
        sel = [i for i, r in enumerate(test) if r.topic == t]
        per_topic[t] = compute_metrics([preds[i] for i in sel], [golds[i] for i in sel], key=t)

    n_train_edges = len(train_graph.edges)
    return {
        "seed": seed,
        "config": config.resolved(),
        "train_size": len(split.train),
        "train_topic_counts": dict(Counter(r.topic for r in split.train)),
        "graph": {
            "nodes": graph.num_nodes,
            "edges": len(graph.edges),
            "train_edges": n_train_edges,
            "retyped_edges": len(graph.retyped),
            "retyped_fraction": len(graph.retyped) / n_train_edges if n_train_edges else 0.0,
            "interaction_edges": sum(
                1 for e in graph.edges if e[1] is RelationType.INTERACTION
            ),
        },
        "gae": {"final_loss": gae_meta["final_loss"], "epochs": gae_meta["epochs"]},
        "classifier": {
            "best_epoch": clf_meta["best_epoch"],
            "best_dev_macro_f1": clf_meta["best_dev_macro_f1"],
            "dev_macro_f1_history": clf_meta["dev_macro_f1_history"],
        },
        "metrics": {
            "overall": overall.to_dict(),
            "per_topic": {t: r.to_dict() for t, r in per_topic.items()},
            "length_buckets": {
                b: r.to_dict() for b, r in bucket_by_length(test, preds, golds).items()
            },
        },
        "predictions": [
            {"id": r.id, "gold": r.label, "pred": p, "probs": [float(x) for x in row]}
            for r, p, row in zip(test, preds, probs)
        ],
    }


def _summary(values: dict[str, list[float]]) -> dict:
    return {
        name: {"mean": float(np.mean(v)), "std": float(np.std(v))}
        for name, v in values.items()
    }


def run_protocol(
    records: Sequence[InteractionRecord], mode: str, config: RunConfig
) -> dict:
    """Run the in-domain or cross-domain protocol over one or more seeds."""
    seeds = list(config.seeds) if config.seeds else [config.seed]
    if mode in ("in-domain", "in_domain"):
        runs = []
        for seed in seeds:
            split = temporal_split(records, config.ratios, per_topic=config.per_topic_split)
            runs.append(run_pipeline(split, split.test, config, seed))
        return {
            "mode": "in_domain",
            "runs": runs,
            "summary": _summary(
                {
                    "accuracy": [r["metrics"]["overall"]["accuracy"] for r in runs],
                    "macro_f1": [r["metrics"]["overall"]["macro_f1"] for r in runs],
                }
            ),
        }

    if mode in ("cross-domain", "cross_domain"):
        topics = sorted({r.topic for r in records})
        if len(topics) < 2:
            raise ProtocolError(f"cross-domain needs at least 2 topics, found {len(topics)}")
        per_seed = []
        for seed in seeds:
            topic_runs = {}
            for held_topic in topics:
                source = [r for r in records if r.topic != held_topic]
                test = sorted(
                    (r for r in records if r.topic == held_topic), key=lambda r: r.timestamp
                )
                # the source-domain temporal test slice is never evaluated;
                # dev comes from the source domains for model selection
                split = temporal_split(source, config.ratios, per_topic=config.per_topic_split)
                doc = run_pipeline(split, test, config, seed)
                doc["held_topic"] = held_topic
                topic_runs[held_topic] = doc
            average = {
                "accuracy": float(
                    np.mean([d["metrics"]["overall"]["accuracy"] for d in topic_runs.values()])
                ),
                "macro_f1": float(
                    np.mean([d["metrics"]["overall"]["macro_f1"] for d in topic_runs.values()])
                ),
            }
            per_seed.append({"seed": seed, "topics": topic_runs, "average": average})
        return {
            "mode": "cross_domain",
            "runs": per_seed,
            "summary": _summary(
                {
                    "accuracy": [r["average"]["accuracy"] for r in per_seed],
                    "macro_f1": [r["average"]["macro_f1"] for r in per_seed],
                }
            ),
        }

    raise ProtocolError(f"unknown protocol mode {mode!r}")


# -- report output ----------------------------------------------------------------

def write_report(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1), encoding="utf-8")


def _metric_rows(mode: str, seed: int, topic: str, report: dict) -> dict:
    row = {
        "mode": mode,
        "topic": topic,
        "seed": seed,
        "accuracy": report["accuracy"],
        "macro_f1": report["macro_f1"],
    }
    for label, m in report["per_class"].items():
        row[f"{label}_precision"] = m["precision"]
        row[f"{label}_recall"] = m["recall"]
        row[f"{label}_f1"] = m["f1"]
    return row


def write_aggregate_csv(protocol_doc: dict, path: str | Path) -> None:
    """Flatten a protocol document into (mode, topic, seed, metrics) rows."""
    mode = protocol_doc["mode"]
    rows = []
    for run in protocol_doc["runs"]:
        if mode == "in_domain":
            rows.append(_metric_rows(mode, run["seed"], "all", run["metrics"]["overall"]))
            for t, rep in run["metrics"]["per_topic"].items():
                rows.append(_metric_rows(mode, run["seed"], t, rep))
        else:
            for t, doc in run["topics"].items():
                rows.append(_metric_rows(mode, run["seed"], t, doc["metrics"]["overall"]))
    if not rows:
        return
    fieldnames = list(rows[0].keys())
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
