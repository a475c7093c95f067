"""Command-line surface: gen, train, eval, recommend, analyze.

All commands are reproducible byte-for-byte given identical inputs and
seeds. Exit codes: 0 success, 2 configuration error, 3 data error,
4 numeric/degenerate failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import analysis, datagen, evaluation, serialization
from .datagen import GeneratorConfig, filter_log, generate, temporal_split
from .features import SchemaError, ViewingEvent, build_schema
from .model import catalog_from_log, precompute_catalog, recommend
from .nn_core import make_rng
from .trainer import TrainConfig, ablate_to_single_viewer, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class ConfigError(ValueError):
    pass


RUN_CONFIG_DEFAULTS = {
    # generator
    **{f.name: f.default for f in dataclasses.fields(GeneratorConfig)},
    # training
    **{f.name: f.default for f in dataclasses.fields(TrainConfig)},
    # dataset protocol
    "min_duration_minutes": 3.0,
    "min_item_count": None,
    "train_fraction": 0.9,
    # evaluation
    "ks": [1, 3, 5, 10],
    # analysis
    "snnm_repetitions": 20,
    "snnm_sample_size": 512,
    "analysis_max_events": 20000,
}


def _key_label(item_key) -> str:
    """Compact CSV-safe label for a canonical item key."""
    parts = []
    for name, value in item_key:
        if isinstance(value, tuple):
            value = "+".join(str(v) for v in value)
        parts.append(f"{name}={value}")
    return "|".join(parts).replace(",", ";")


def load_run_config(path: str | None, overrides: dict) -> dict:
    """Defaults, then config file, then command-line overrides.

    Unknown keys in the config file are rejected.
    """
    config = dict(RUN_CONFIG_DEFAULTS)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        unknown = set(doc) - set(config)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config.update(doc)
    for k, v in overrides.items():
        if v is not None:
            config[k] = v
    return config


def _generator_config(cfg: dict) -> GeneratorConfig:
    names = {f.name for f in dataclasses.fields(GeneratorConfig)}
    return GeneratorConfig(**{k: cfg[k] for k in names})


def _train_config(cfg: dict) -> TrainConfig:
    names = {f.name for f in dataclasses.fields(TrainConfig)}
    return TrainConfig(**{k: cfg[k] for k in names})


def _prepared_split(cfg: dict, dataset_path: str):
    log = serialization.read_dataset(dataset_path)
    if not log:
        raise serialization.FormatError("dataset is empty")
    log = filter_log(log, cfg["min_duration_minutes"], cfg["min_item_count"])
    return temporal_split(log, cfg["train_fraction"])


def cmd_gen(args) -> int:
    cfg = load_run_config(args.config, {"seed": args.seed})
    log = generate(_generator_config(cfg))
    serialization.write_dataset(log, args.out)
    print(f"wrote {len(log)} events to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_run_config(
        args.config, {"seed": args.seed, "objective": args.objective}
    )
    train_cfg = _train_config(cfg)
    train_log, _ = _prepared_split(cfg, args.dataset)
    if args.one_id:
        train_log = ablate_to_single_viewer(train_log, make_rng(train_cfg.seed + 7))
    schema = build_schema(train_log)
    model, history = train(train_log, schema, train_cfg)
    serialization.save_checkpoint(
        model, args.checkpoint, objective=train_cfg.objective, seed=train_cfg.seed
    )
    if args.history:
        serialization.write_history_csv(history, args.history)
    print(
        f"trained {train_cfg.objective} for {history.stopping_step} steps "
        f"({history.stopping_reason}); checkpoint at {args.checkpoint}"
    )
    return EXIT_OK


def _parse_ks(text: str) -> list[int]:
    try:
        ks = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --Ks value {text!r}") from exc
    if not ks or any(k < 1 for k in ks):
        raise ConfigError("--Ks must be positive integers")
    return ks


def cmd_eval(args) -> int:
    cfg = load_run_config(args.config, {"seed": args.seed})
    if args.Ks:
        cfg["ks"] = _parse_ks(args.Ks)
    model, meta = serialization.load_checkpoint(args.checkpoint)
    train_log, test_log = _prepared_split(cfg, args.dataset)
    items = catalog_from_log(train_log)
    catalog = precompute_catalog(model, items)
    ks = cfg["ks"]

    def model_ranker(event: ViewingEvent) -> np.ndarray:
        return recommend(model, event, catalog).ranked_item_indices

    rows = [
        evaluation.evaluate(model_ranker, test_log, items, ks).as_row(
            meta.get("objective") or "model"
        )
    ]
    if args.baselines:
        rng = make_rng(cfg["seed"])
        for name, ranker in (
            ("random", evaluation.random_ranker(len(items), rng)),
            ("toppop", evaluation.toppop(train_log, items)),
            ("toppop_temporal", evaluation.toppop_temporal(train_log, items)),
        ):
            rows.append(evaluation.evaluate(ranker, test_log, items, ks).as_row(name))
    serialization.write_report_csv(rows, args.report)
    for row in rows:
        print(",".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    return EXIT_OK


def cmd_recommend(args) -> int:
    model, _ = serialization.load_checkpoint(args.checkpoint)
    cfg = load_run_config(args.config, {})
    try:
        with open(args.context, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise serialization.FormatError(f"cannot read context document: {exc}") from exc
    attrs = serialization._attrs_from_json(doc.get("context", doc))
    event = ViewingEvent(
        item_attributes={}, context_attributes=attrs, timestamp=0.0, duration_min=0.0
    )
    train_log, _ = _prepared_split(cfg, args.dataset)
    catalog = precompute_catalog(model, catalog_from_log(train_log))
    result = recommend(model, event, catalog)
    for idx, score in list(zip(result.ranked_item_indices, result.scores))[: args.top_k]:
        label = json.dumps(
            serialization._attrs_to_json(catalog.items[idx]), sort_keys=True
        )
        print(f"{label}\t{score:.6f}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = load_run_config(args.config, {"seed": args.seed})
    model, _ = serialization.load_checkpoint(args.checkpoint)
    train_log, test_log = _prepared_split(cfg, args.dataset)
    if not test_log:
        raise serialization.FormatError("empty test split")
    rng = make_rng(cfg["seed"])
    if len(test_log) > cfg["analysis_max_events"]:
        idx = rng.choice(len(test_log), size=cfg["analysis_max_events"], replace=False)
        test_log = [test_log[i] for i in sorted(idx)]
    emb, labels = analysis.context_embeddings_by_content(test_log, model)

    if args.mode == "export":
        analysis.export_embeddings(emb, [_key_label(l) for l in labels], args.out)
        print(f"exported {len(labels)} embeddings to {args.out}")
        return EXIT_OK

    if args.mode == "snnm":
        try:
            curve = analysis.snnm_sweep(
                analysis.LabeledEmbeddings(emb, labels),
                repetitions=cfg["snnm_repetitions"],
                n=min(cfg["snnm_sample_size"], len(labels)),
                rng=rng,
            )
        except (analysis.DegenerateMeasure, ValueError) as exc:
            print(f"degenerate SNNM input: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("T,mean,ci95,skipped\n")
            for t, mean, ci, sk in zip(
                curve.temperatures, curve.means, curve.ci95, curve.skipped_term_counts
            ):
                fh.write(f"{t:.17g},{mean:.17g},{ci:.17g},{sk}\n")
        print(f"wrote SNNM curve to {args.out}")
        return EXIT_OK

    # simmatrix
    catalog = precompute_catalog(model, catalog_from_log(train_log))
    sim = analysis.similarity_matrix(test_log, model, catalog)
    names = [_key_label(k) for k in sim.content_keys]
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("content," + ",".join(names) + ",dispersion\n")
        for i, name in enumerate(names):
            cells = [name] + [f"{v:.6g}" for v in sim.values[i]] + [f"{sim.dispersion[i]:.6g}"]
            fh.write(",".join(cells) + "\n")
    print(f"wrote similarity matrix to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contextrec",
        description="Context-aware two-tower recommender pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run-config file")
        p.add_argument("--seed", type=int, help="override the config seed")

    p = sub.add_parser("gen", help="generate a synthetic viewing log")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model on a dataset file")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--history", help="optional training-history CSV path")
    p.add_argument("--objective", choices=["jcce", "rjcce", "ljcce", "bpr"])
    p.add_argument(
        "--1id",
        dest="one_id",
        action="store_true",
        help="collapse co-viewing groups to one random viewer before training",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--baselines", action="store_true")
    p.add_argument("--Ks", help="comma-separated HR cutoffs, e.g. 1,3,5")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("recommend", help="rank the catalog for one context")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True, help="dataset providing the item universe")
    p.add_argument("--context", required=True, help="JSON context document")
    p.add_argument("--top-k", type=int, default=10)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("analyze", help="representation-quality exports")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--mode", choices=["snnm", "simmatrix", "export"], required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (serialization.FormatError, SchemaError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FloatingPointError, analysis.DegenerateMeasure) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
