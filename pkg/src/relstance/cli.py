"""Command-line pipeline: build-graph, pretrain-gae, featurize, train,
evaluate, grad-check, synth.

Subcommands chain through file artifacts (graph JSON, autoencoder and
classifier checkpoints, embedding tables, reports).  Every invocation writes
its artifacts into ``<out-dir>/<command>-<config-hash>/`` together with the
fully resolved configuration, so a rerun with the same config reproduces the
outputs bitwise.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import classifier as clf_mod
from . import gae as gae_mod
from . import synth
from .classifier import ClassifierError
from .config import ConfigError, RunConfig, build_config
from .evaluation import run_protocol, write_aggregate_csv, write_report
from .gae import GaeError
from .graph import GraphError, RelationGraph, build_graph, inject_interaction_edges
from .ingest import DatasetError, parse_dataset, temporal_split, write_dataset
from .metrics import compute_metrics
from .textfeat import TableError, featurize_records, load_embedding_table, save_embedding_table

_CONFIG_FLAGS = [
    ("--data", "data", str, "dataset file"),
    ("--format", "format", str, "dataset format: jsonl or csv"),
    ("--table", "table", str, "embedding table file"),
    ("--tau", "tau", str, "snapshot window seconds, or 'per-edge'"),
    ("--rho", "rho", float, "probability of retyping a training edge to interaction"),
    ("--ratios", "ratios", str, "train,dev,test fractions (e.g. 0.8,0.1,0.1)"),
    ("--per-topic-split", "per_topic_split", str, "split each topic separately (true/false)"),
    ("--d", "d", int, "autoencoder embedding width"),
    ("--decoder", "decoder_kind", str, "distmult, transe, or hole"),
    ("--gae-lr", "gae_lr", float, "autoencoder learning rate"),
    ("--gae-epochs", "gae_epochs", int, "autoencoder epochs"),
    ("--edge-keep", "edge_keep_fraction", float, "supervision subsample fraction"),
    ("--triplet-batch", "triplet_batch", int, "triplets per optimizer step"),
    ("--transe-margin", "transe_margin", float, "margin for the transe decoder"),
    ("--message-all-edges", "message_all_edges", str, "encoder sees all edges (true/false)"),
    ("--text-dim", "text_dim", int, "hash featurizer width"),
    ("--fusion", "fusion_mode", str, "concat or add"),
    ("--d-rel-out", "d_rel_out", int, "relation projection width"),
    ("--lambda-recon", "lambda_recon", float, "reconstruction loss weight"),
    ("--clf-lr", "clf_lr", float, "classifier learning rate"),
    ("--clf-epochs", "clf_epochs", int, "classifier epochs"),
    ("--batch-size", "batch_size", int, "classifier batch size"),
    ("--radius", "radius", int, "subgraph radius"),
    ("--freeze-encoder", "freeze_encoder", str, "freeze the encoder (true/false)"),
    ("--no-pretraining", "no_pretraining", str, "skip pretraining, train jointly (true/false)"),
    ("--use-relations", "use_relations", str, "fuse relation features (true/false)"),
    ("--mode", "mode", str, "protocol: in-domain or cross-domain"),
    ("--seed", "seed", int, "random seed"),
    ("--seeds", "seeds", str, "comma list of seeds for repeated runs"),
    ("--out-dir", "out_dir", str, "artifact root directory"),
]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    for flag, dest, typ, help_text in _CONFIG_FLAGS:
        parser.add_argument(flag, dest=dest, type=typ, default=None, help=help_text)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relstance",
        description="Relation-graph-assisted (dis)agreement classification pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("build-graph", "build the typed relation graph from the training split"),
        ("pretrain-gae", "pretrain the graph autoencoder on a graph artifact"),
        ("featurize", "hash-featurize a dataset into an embedding table"),
        ("train", "train the fusion classifier"),
        ("evaluate", "run a full protocol or score a trained classifier"),
        ("grad-check", "verify analytic gradients against finite differences"),
        ("synth", "emit a deterministic synthetic dataset"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_config_flags(p)
        if name == "pretrain-gae":
            p.add_argument("--graph", required=True, help="graph JSON artifact")
        if name == "train":
            p.add_argument("--graph", required=True)
            p.add_argument("--gae", required=True, help="autoencoder checkpoint")
        if name == "evaluate":
            p.add_argument("--graph", help="score an existing model: graph artifact")
            p.add_argument("--gae", help="score an existing model: autoencoder checkpoint")
            p.add_argument("--classifier", help="score an existing model: classifier checkpoint")
            p.add_argument("--sweep", help="e.g. rho=0,0.1,0.2,0.3,0.4 or tau=3600,86400")
        if name == "grad-check":
            p.add_argument("--probes", type=int, default=100)
            p.add_argument("--eps", type=float, default=1e-5)
        if name == "synth":
            p.add_argument("--kind", choices=("two-community", "fusion"), default="fusion")
            p.add_argument("--n-pairs", type=int, default=200)
            p.add_argument("--n-nodes", type=int, default=60)
            p.add_argument("--n-topics", type=int, default=1)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {
        dest: getattr(args, dest)
        for _, dest, _, _ in _CONFIG_FLAGS
        if getattr(args, dest, None) is not None
    }
    return build_config(file_path=args.config, overrides=overrides)


def _run_dir(config: RunConfig, command: str) -> Path:
    out = Path(config.out_dir) / f"{command}-{config.config_hash()}"
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(config.resolved(), sort_keys=True, indent=1), encoding="utf-8"
    )
    return out


def _load_records(config: RunConfig):
    if not config.data:
        raise DatasetError("--data is required for this command")
    return parse_dataset(config.data, config.format)


def _cmd_build_graph(args) -> int:
    config = _config_from_args(args)
    records = _load_records(config)
    split = temporal_split(records, config.ratios, per_topic=config.per_topic_split)
    graph = build_graph(split.train, tau=config.tau)
    heldout = [(r.reply_author, r.comment_author) for r in (*split.dev, *split.test)]
    graph = inject_interaction_edges(graph, heldout, config.rho, config.seed)
    graph.meta["config"] = config.resolved()
    out = _run_dir(config, "build-graph")
    graph.save(out / "graph.json")
    print(f"graph: {graph.num_nodes} nodes, {len(graph.edges)} edges -> {out / 'graph.json'}")
    return 0


def _cmd_pretrain_gae(args) -> int:
    config = _config_from_args(args)
    graph = RelationGraph.load(args.graph)
    cfg = gae_mod.GaeConfig(
        learning_rate=config.gae_lr,
        epochs=config.gae_epochs,
        triplet_batch=config.triplet_batch,
        edge_keep_fraction=config.edge_keep_fraction,
        seed=config.seed,
        d=config.d,
        decoder_kind=config.decoder_kind,
        transe_margin=config.transe_margin,
        message_all_edges=config.message_all_edges,
    )
    params, meta = gae_mod.train_gae(graph, cfg)
    out = _run_dir(config, "pretrain-gae")
    gae_mod.save_checkpoint(
        params,
        out / "gae.json",
        rng_seed=config.seed,
        extra={"final_loss": meta["final_loss"], "config": config.resolved()},
    )
    print(f"pretrained {config.decoder_kind}: final loss {meta['final_loss']} -> {out / 'gae.json'}")
    return 0


def _cmd_featurize(args) -> int:
    config = _config_from_args(args)
    records = _load_records(config)
    table = featurize_records(records, dim=config.text_dim)
    out = _run_dir(config, "featurize")
    save_embedding_table(table, out / "table.txt")
    print(f"featurized {len(table)} records at dim {table.dim} -> {out / 'table.txt'}")
    return 0


def _cmd_train(args) -> int:
    config = _config_from_args(args)
    records = _load_records(config)
    split = temporal_split(records, config.ratios, per_topic=config.per_topic_split)
    graph = RelationGraph.load(args.graph)
    gae_params = gae_mod.load_checkpoint(args.gae)
    text_source = load_embedding_table(config.table) if config.table else None
    cfg = clf_mod.ClassifierConfig(
        learning_rate=config.clf_lr,
        epochs=config.clf_epochs,
        batch_size=config.batch_size,
        seed=config.seed,
        lambda_recon=config.lambda_recon,
        fusion_mode=config.fusion_mode,
        d_rel_out=config.d_rel_out,
        text_dim=config.text_dim,
        radius=config.radius,
        freeze_encoder=config.freeze_encoder,
        no_pretraining=config.no_pretraining,
        use_relations=config.use_relations,
    )
    params, meta = clf_mod.train_classifier(split, graph, gae_params, text_source, cfg)
    out = _run_dir(config, "train")
    clf_mod.save_classifier(
        params,
        out / "classifier.json",
        extra={
            "best_epoch": meta["best_epoch"],
            "best_dev_macro_f1": meta["best_dev_macro_f1"],
            "config": config.resolved(),
        },
    )
    if not meta["frozen_encoder"]:
        gae_mod.save_checkpoint(meta["gae"], out / "gae-finetuned.json", rng_seed=config.seed)
    print(
        f"trained classifier: best dev macro-F1 {meta['best_dev_macro_f1']:.4f} "
        f"at epoch {meta['best_epoch']} -> {out / 'classifier.json'}"
    )
    return 0


def _parse_sweep(spec: str) -> tuple[str, list[str]]:
    key, _, values = spec.partition("=")
    key = key.strip()
    if key not in ("rho", "tau") or not values:
        raise ConfigError(f"--sweep expects rho=... or tau=..., got {spec!r}")
    return key, [v.strip() for v in values.split(",")]


def _cmd_evaluate(args) -> int:
    config = _config_from_args(args)
    records = _load_records(config)

    if args.classifier:
        if not (args.graph and args.gae):
            raise ConfigError("scoring a checkpoint needs --graph and --gae too")
        split = temporal_split(records, config.ratios, per_topic=config.per_topic_split)
        graph = RelationGraph.load(args.graph)
        gae_params = gae_mod.load_checkpoint(args.gae)
        params = clf_mod.load_classifier(args.classifier)
        text_source = load_embedding_table(config.table) if config.table else None
        preds, probs = clf_mod.predict_records(
            split.test, graph, gae_params, params, text_source,
            radius=config.radius, use_relations=config.use_relations,
        )
        report = compute_metrics(preds, [r.label for r in split.test], key="overall")
        out = _run_dir(config, "evaluate")
        write_report({"config": config.resolved(), "overall": report.to_dict()}, out / "report.json")
        clf_mod.write_predictions(out / "predictions.jsonl", split.test, preds, probs)
        print(
            f"test accuracy {report.accuracy:.4f}, macro-F1 {report.macro_f1:.4f} "
            f"-> {out / 'report.json'}"
        )
        return 0

    if args.sweep:
        key, values = _parse_sweep(args.sweep)
        out = _run_dir(config, "evaluate-sweep")
        for raw in values:
            sub_config = dataclasses.replace(
                config, **{key: None if raw == "per-edge" else float(raw)}
            )
            doc = run_protocol(records, sub_config.mode, sub_config)
            write_report(doc, out / f"report-{key}-{raw}.json")
            print(f"{key}={raw}: macro-F1 {doc['summary']['macro_f1']['mean']:.4f}")
        return 0

    doc = run_protocol(records, config.mode, config)
    out = _run_dir(config, "evaluate")
    write_report(doc, out / "report.json")
    write_aggregate_csv(doc, out / "aggregate.csv")
    print(
        f"{config.mode}: macro-F1 {doc['summary']['macro_f1']['mean']:.4f} "
        f"± {doc['summary']['macro_f1']['std']:.4f} -> {out / 'report.json'}"
    )
    return 0


def _cmd_grad_check(args) -> int:
    config = _config_from_args(args)
    records = synth.two_community_records(n_nodes=12, p_within=0.7, p_cross=0.7, seed=config.seed)
    graph = build_graph(records)
    worst = 0.0
    for kind in gae_mod.DECODER_KINDS:
        cfg = gae_mod.GaeConfig(seed=config.seed, d=16, decoder_kind=kind)
        params = gae_mod.probe_params(graph.node_ids, cfg)
        err = gae_mod.finite_diff_check(params, graph, probe_count=args.probes, eps=args.eps, seed=config.seed)
        print(f"decoder {kind}: max relative error {err:.3e}")
        worst = max(worst, err)

    gae_params = gae_mod.probe_params(
        graph.node_ids, gae_mod.GaeConfig(seed=config.seed, d=16)
    )
    clf_cfg = clf_mod.ClassifierConfig(seed=config.seed, d_rel_out=16, text_dim=16)
    clf_params = clf_mod.ClassifierParams.init(16, 16, clf_cfg)
    batch = [(r, r.label) for r in records[:6]]
    err = clf_mod.finite_diff_check(
        clf_params, gae_params, graph, batch, probe_count=args.probes, eps=args.eps, seed=config.seed
    )
    print(f"classifier path: max relative error {err:.3e}")
    worst = max(worst, err)
    ok = worst < 1e-5
    print(f"gradient check {'PASS' if ok else 'FAIL'} (max {worst:.3e}, tolerance 1e-5)")
    return 0 if ok else 1


def _cmd_synth(args) -> int:
    config = _config_from_args(args)
    if args.kind == "two-community":
        records = synth.two_community_records(n_nodes=args.n_nodes, seed=config.seed)
    else:
        records = synth.fusion_records(
            n_pairs=args.n_pairs, seed=config.seed, n_topics=args.n_topics
        )
    out = _run_dir(config, f"synth-{args.kind}")
    write_dataset(records, out / "dataset.jsonl")
    print(f"wrote {len(records)} records -> {out / 'dataset.jsonl'}")
    return 0


_COMMANDS = {
    "build-graph": _cmd_build_graph,
    "pretrain-gae": _cmd_pretrain_gae,
    "featurize": _cmd_featurize,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "grad-check": _cmd_grad_check,
    "synth": _cmd_synth,
}


def dispatch(argv: list[str]) -> int:
    """Parse and run; exit code 0 on success, 1 on failed preconditions,
    2 on usage errors."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return _COMMANDS[args.command](args)
    except (DatasetError, GraphError, GaeError, ClassifierError, TableError, ConfigError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
