"""Command-line pipeline: validate, stats, curves, train, eval, transfer, run-all.

Outputs are machine-readable JSON/CSV only.  Option precedence is CLI flags
over config-file values over defaults, and the effective configuration is
echoed into the output directory.  Exit codes: 0 success, 2 input or
validation error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import fusion, metrics, retrieval, similarity, transfer
from .store import (
    DataError,
    DEFAULT_LABELS,
    EmbeddingStore,
    ROLE_GENERATED,
    ROLE_ORIGINAL,
    load_manifest,
    load_pairs,
    load_store,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


class _Options:
    """Flag > config > default resolution for one subcommand invocation."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = {}
        if getattr(args, "config", None):
            with open(args.config, "r", encoding="utf-8") as fh:
                self.config = json.load(fh)
            if not isinstance(self.config, dict):
                raise DataError("config file must hold a JSON object")
        self.effective: dict = {}

    def get(self, key: str, default=None):
        value = getattr(self.args, key, None)
        if value is None:
            value = self.config.get(key, default)
        self.effective[key] = value
        return value

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            raise DataError(f"missing required option --{key.replace('_', '-')}")
        return value

    def echo(self, out: Path, command: str) -> None:
        payload = dict(self.effective)
        payload["command"] = command
        _dump_json(payload, out / "effective_config.json")


def _out_dir(opts: _Options, required: bool = False) -> Path | None:
    out = opts.get("out")
    if out is None:
        if required:
            raise DataError("missing required option --out")
        return None
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_stores(opts: _Options) -> EmbeddingStore:
    paths = opts.require("store")
    if isinstance(paths, str):
        paths = [paths]
    stores = [load_store(p) for p in paths]
    return stores[0] if len(stores) == 1 else EmbeddingStore.concat(stores)


def _labels(opts: _Options) -> tuple[str, ...]:
    raw = opts.get("labels")
    if raw is None:
        return DEFAULT_LABELS
    if isinstance(raw, str):
        raw = [part.strip() for part in raw.split(",") if part.strip()]
    return tuple(raw)


def _threads(opts: _Options) -> int:
    value = opts.get("threads")
    return int(value) if value is not None else (os.cpu_count() or 1)


def cmd_validate(opts: _Options) -> int:
    store = _load_stores(opts)
    manifest = load_manifest(opts.require("manifest"), store)
    labels = _labels(opts)
    report = {
        "store": {"count": store.count, "dim": store.dim},
        "manifest": manifest.counts(),
        "pairs": [],
    }
    pair_paths = opts.get("pairs") or []
    if isinstance(pair_paths, str):
        pair_paths = [pair_paths]
    for path in pair_paths:
        pairs = load_pairs(path, store, manifest, labels=labels)
        if not pairs:
            raise DataError(f"no pairs in {path}")
        label_counts: dict[str, int] = {}
        for p in pairs:
            label_counts[p.label] = label_counts.get(p.label, 0) + 1
        report["pairs"].append(
            {"path": str(path), "count": len(pairs), "labels": label_counts}
        )
    out = _out_dir(opts)
    if out is not None:
        _dump_json(report, out / "validation.json")
        opts.echo(out, "validate")
    _print_json(report)
    return EXIT_OK


def cmd_stats(opts: _Options) -> int:
    store = _load_stores(opts)
    manifest = load_manifest(opts.require("manifest"), store)
    query_ids = manifest.ids(
        role=opts.get("query_role", ROLE_ORIGINAL),
        split=opts.get("query_split"),
    )
    corpus_ids = manifest.ids(
        role=opts.get("corpus_role", ROLE_GENERATED),
        split=opts.get("corpus_split"),
    )
    stats = similarity.pairwise_stats(
        store, query_ids, corpus_ids,
        bins=int(opts.get("bins", 100)),
        threads=_threads(opts),
    )
    payload = {
        "mean": stats.mean,
        "std": stats.std,
        "n": stats.n,
        "bins": len(stats.histogram),
    }
    out = _out_dir(opts)
    if out is not None:
        _dump_json(payload, out / "stats.json")
        hist = "bin_lower,count\n" + "".join(
            f"{lower:.12g},{count}\n" for lower, count in stats.histogram
        )
        (out / "histogram.csv").write_text(hist, encoding="utf-8")
        opts.echo(out, "stats")
    _print_json(payload)
    return EXIT_OK


def cmd_curves(opts: _Options) -> int:
    store = _load_stores(opts)
    manifest = load_manifest(opts.require("manifest"), store)
    split = opts.require("split")
    mode = opts.get("mode", "full")
    k_max = int(opts.get("k_max", retrieval.DEFAULT_K_MAX))
    threads = _threads(opts)
    out = _out_dir(opts, required=True)
    if mode == "full":
        queries = manifest.ids(role=ROLE_ORIGINAL, split=split)
        corpus = manifest.ids(role=ROLE_GENERATED, split=opts.get("corpus_split"))
        result = retrieval.curve(
            store, manifest, queries, corpus, k_max=k_max, threads=threads
        )
        payload = {"mode": "full", "split": split, "curve": result.as_dict()}
        (out / "curve.csv").write_text(retrieval.curve_to_csv(result), encoding="utf-8")
    elif mode == "sampled":
        samples, aggregate = retrieval.sampled_curves(
            store, manifest, split,
            sample_size=int(opts.get("sample_size", 1000)),
            n_samples=int(opts.get("n_samples", retrieval.DEFAULT_N_SAMPLES)),
            seed=int(opts.get("seed", 0)),
            k_max=k_max,
            threads=threads,
        )
        payload = {
            "mode": "sampled",
            "split": split,
            "aggregate": aggregate.as_dict(),
            "samples": [c.as_dict() for c in samples],
        }
        (out / "curve.csv").write_text(retrieval.curve_to_csv(aggregate), encoding="utf-8")
    else:
        raise DataError(f"unknown mode {mode!r}, expected full or sampled")
    _dump_json(payload, out / "curve.json")
    opts.echo(out, "curves")
    return EXIT_OK


def _train_config(opts: _Options) -> fusion.TrainConfig:
    return fusion.TrainConfig(
        epochs=int(opts.get("epochs", 100)),
        batch_size=int(opts.get("batch_size", 256)),
        learning_rate=float(opts.get("lr", 1e-3)),
        seed=int(opts.get("seed", 0)),
    )


def cmd_train(opts: _Options) -> int:
    store = _load_stores(opts)
    manifest = load_manifest(opts.require("manifest"), store)
    labels = _labels(opts)
    pairs_train = load_pairs(opts.require("pairs"), store, manifest, labels=labels)
    pairs_dev = load_pairs(opts.require("dev_pairs"), store, manifest, labels=labels)
    config = _train_config(opts)
    out = _out_dir(opts, required=True)
    model, history = fusion.train(
        pairs_train, pairs_dev, store, config,
        d_hidden=int(opts.get("hidden", fusion.DEFAULT_HIDDEN)),
        label_order=DEFAULT_LABELS,
    )
    fusion.save_model(model, out / "model.bin")
    (out / "history.csv").write_text(fusion.history_to_csv(history), encoding="utf-8")
    _dump_json(
        {
            "best_epoch": history.best_epoch + 1,
            "best_dev_acc": history.dev_acc[history.best_epoch],
            "best_dev_f1": history.dev_f1[history.best_epoch],
            "epochs": len(history.dev_acc),
        },
        out / "train_summary.json",
    )
    opts.echo(out, "train")
    return EXIT_OK


def _eval_report(opts: _Options, as_transfer: bool):
    store = _load_stores(opts)
    manifest = load_manifest(opts.require("manifest"), store)
    model = fusion.load_model(opts.require("model"))
    labels = _labels(opts)
    unknown = set(labels) - set(model.label_order)
    if unknown:
        raise DataError(
            f"pair labels {sorted(unknown)} outside model labels {list(model.label_order)}"
        )
    pairs = load_pairs(opts.require("pairs"), store, manifest, labels=labels)
    if not pairs:
        raise DataError("no pairs")
    if as_transfer:
        policy = transfer.TransferPolicy.for_target(
            model.label_order, labels,
            neutral_handling=opts.get("policy", transfer.COUNT_AS_ERROR),
        )
        result = transfer.evaluate_transfer(model, pairs, store, policy)
        return result.as_dict(), result.report
    gold = [p.label for p in pairs]
    pred = fusion.predict_batch(model, pairs, store)
    report = metrics.evaluate(gold, pred, model.label_order)
    return report.as_dict(), report


def cmd_eval(opts: _Options) -> int:
    payload, report = _eval_report(opts, as_transfer=False)
    out = _out_dir(opts)
    if out is not None:
        _dump_json(payload, out / "report.json")
        (out / "confusion.csv").write_text(metrics.confusion_to_csv(report), encoding="utf-8")
        opts.echo(out, "eval")
    _print_json(payload)
    return EXIT_OK


def cmd_transfer(opts: _Options) -> int:
    payload, report = _eval_report(opts, as_transfer=True)
    out = _out_dir(opts)
    if out is not None:
        _dump_json(payload, out / "report.json")
        (out / "confusion.csv").write_text(metrics.confusion_to_csv(report), encoding="utf-8")
        opts.echo(out, "transfer")
    _print_json(payload)
    return EXIT_OK


def cmd_run_all(opts: _Options) -> int:
    """Chain validate, stats, curves, train, and the 2x2 evaluation matrix."""
    out = _out_dir(opts, required=True)
    config = opts.config
    datasets = config.get("datasets")
    if not datasets:
        raise DataError("run-all config needs a 'datasets' object")
    store = _load_stores(opts)
    manifest = load_manifest(opts.require("manifest"), store)
    labels = _labels(opts)
    threads = _threads(opts)
    seed = int(opts.get("seed", 0))

    loaded = {}
    for name, paths in datasets.items():
        for split in ("train", "dev", "test"):
            if split not in paths:
                raise DataError(f"dataset {name!r} missing {split!r} pairs path")
        loaded[name] = {
            split: load_pairs(paths[split], store, manifest, labels=labels)
            for split in ("train", "dev", "test")
        }

    originals = manifest.ids(role=ROLE_ORIGINAL)
    generated = manifest.ids(role=ROLE_GENERATED)
    if originals and generated:
        stats = similarity.pairwise_stats(
            store, originals, generated,
            bins=int(opts.get("bins", 100)), threads=threads,
        )
        _dump_json(
            {"mean": stats.mean, "std": stats.std, "n": stats.n},
            out / "stats.json",
        )
        split = config.get("curves_split", "dev")
        sample_size = int(opts.get("sample_size", 1000))
        available = len(manifest.ids(role=ROLE_ORIGINAL, split=split))
        if available >= sample_size:
            _, aggregate = retrieval.sampled_curves(
                store, manifest, split,
                sample_size=sample_size,
                n_samples=int(opts.get("n_samples", retrieval.DEFAULT_N_SAMPLES)),
                seed=seed,
                k_max=int(opts.get("k_max", retrieval.DEFAULT_K_MAX)),
                threads=threads,
            )
            (out / "curve.csv").write_text(
                retrieval.curve_to_csv(aggregate), encoding="utf-8"
            )

    train_config = _train_config(opts)
    summary: dict = {"labels": list(labels), "accuracy": {}, "macro_f1": {}}
    models = {}
    for name, splits in loaded.items():
        model_dir = out / f"train_{name}"
        model_dir.mkdir(exist_ok=True)
        model, history = fusion.train(
            splits["train"], splits["dev"], store, train_config,
            d_hidden=int(opts.get("hidden", fusion.DEFAULT_HIDDEN)),
            label_order=DEFAULT_LABELS,
        )
        fusion.save_model(model, model_dir / "model.bin")
        (model_dir / "history.csv").write_text(
            fusion.history_to_csv(history), encoding="utf-8"
        )
        models[name] = model
    for train_name, model in models.items():
        for test_name, splits in loaded.items():
            pairs = splits["test"]
            gold = [p.label for p in pairs]
            pred = fusion.predict_batch(model, pairs, store)
            report = metrics.evaluate(gold, pred, model.label_order)
            key = f"train_{train_name}__test_{test_name}"
            summary["accuracy"][key] = report.accuracy
            summary["macro_f1"][key] = report.macro_f1
            _dump_json(report.as_dict(), out / f"eval_{key}.json")
    _dump_json(summary, out / "summary.json")
    opts.echo(out, "run-all")
    _print_json(summary)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--store", action="append", help="binary embedding store (repeatable)")
    parser.add_argument("--manifest", help="JSONL manifest path")
    parser.add_argument("--config", help="JSON config file (flags take precedence)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--threads", type=int, help="worker thread cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="veval",
        description="Validate embedding corpora and train/evaluate entailment classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check store, manifest, and pair files")
    _add_common(p)
    p.add_argument("--pairs", action="append", help="pairs JSONL (repeatable)")
    p.add_argument("--labels", help="comma-separated label set")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="pairwise cosine distribution statistics")
    _add_common(p)
    p.add_argument("--query-role", dest="query_role")
    p.add_argument("--query-split", dest="query_split")
    p.add_argument("--corpus-role", dest="corpus_role")
    p.add_argument("--corpus-split", dest="corpus_split")
    p.add_argument("--bins", type=int)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("curves", help="recall@k / precision@k curves")
    _add_common(p)
    p.add_argument("--split")
    p.add_argument("--mode", choices=["full", "sampled"])
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--sample-size", dest="sample_size", type=int)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--corpus-split", dest="corpus_split")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("train", help="train the fused-feature MLP classifier")
    _add_common(p)
    p.add_argument("--pairs", help="training pairs JSONL")
    p.add_argument("--dev-pairs", dest="dev_pairs", help="dev pairs JSONL")
    p.add_argument("--labels", help="comma-separated label set")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--hidden", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a pairs file")
    _add_common(p)
    p.add_argument("--pairs")
    p.add_argument("--model")
    p.add_argument("--labels", help="comma-separated label set")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("transfer", help="cross-dataset evaluation with label projection")
    _add_common(p)
    p.add_argument("--pairs")
    p.add_argument("--model")
    p.add_argument("--labels", help="comma-separated target label set")
    p.add_argument("--policy", choices=list(transfer.NEUTRAL_HANDLING))
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("run-all", help="full pipeline for one dataset pair")
    _add_common(p)
    p.add_argument("--labels", help="comma-separated label set")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_run_all)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _Options(args)
        return args.func(opts)
    except (DataError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
