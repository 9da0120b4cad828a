"""Command-line entry point.

Subcommands: ``ingest`` (validate a corpus manifest), ``synth`` (emit a
synthetic corpus plus feature files), ``train`` (run the cross-validation
protocol from a run-manifest JSON) and ``report`` (aggregate results.csv
files into summary.md).

Exit codes: 0 success, 1 validation failure, 2 runtime failure. All
randomness is seeded from configuration; outputs are overwritten
atomically so reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import corpus, featstore, metrics, trainer
from .errors import EmptyResults, LayoutGnnError, SchemaError
from .frameworks import FrameworkSpec
from .graphbuild import K_CLOSEST
from .nncore import save_checkpoint


def _write_atomic(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    if isinstance(data, str):
        tmp.write_text(data, encoding="utf-8")
    else:
        tmp.write_bytes(data)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

def cmd_ingest(args: argparse.Namespace) -> int:
    try:
        text = Path(args.manifest).read_text(encoding="utf-8")
    except OSError as e:
        print(f"error: cannot read manifest: {e}", file=sys.stderr)
        return 1
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        print(f"error: not valid JSON: {e}", file=sys.stderr)
        return 1
    try:
        docs = corpus.documents_from_dict(raw)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    problems = corpus.validate_documents(docs, collect=True)
    if problems:
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return 1
    n_pages = sum(len(d.pages) for d in docs)
    n_objects = sum(len(p.objects) for d in docs for p in d.pages)
    print(f"documents: {len(docs)}")
    print(f"pages: {n_pages}")
    print(f"objects: {n_objects}")
    return 0


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args: argparse.Namespace) -> int:
    docs = corpus.make_synthetic_corpus(
        seed=args.seed,
        n_docs=args.docs,
        pages_per_doc=args.pages,
        objects_per_page=args.objects,
        source_id=args.source,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_atomic(out / "corpus.json", corpus.manifest_json(docs))
    for modality, dim in (("text", args.text_dim), ("vision", args.vision_dim)):
        table = featstore.synth_embeddings(docs, modality, dim, args.seed, signal=args.signal)
        featstore.write_embeddings(table, out / f"{modality}.emb1")
    print(f"wrote corpus.json, text.emb1, vision.emb1 to {out}")
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def _spec_from_config(run: dict) -> FrameworkSpec:
    graph = run.get("graph", {})
    return FrameworkSpec(
        kind=run["framework"],
        backbone_text=run["backbone_text"],
        backbone_vision=run.get("backbone_vision"),
        modality=run.get("modality"),
        graph_kind=graph.get("kind", K_CLOSEST),
        k=graph.get("k", 4),
        depth=run.get("depth", 2),
        hidden=run.get("hidden", 256),
        head_hidden=run.get("head_hidden", 128),
        heads=run.get("heads", 4),
        hops=run.get("hops", 3),
    )


def _train_config_from(run: dict) -> trainer.TrainConfig:
    seeds = run.get("seeds", {})
    return trainer.TrainConfig(
        epochs=run.get("epochs", 350),
        lr=run.get("lr", 1e-3),
        momentum=run.get("momentum", 0.9),
        dropout=run.get("dropout", 0.1),
        batch_pages=run.get("batch_pages", 16),
        class_weight_mode=run.get("class_weight_mode", trainer.INVERSE_FREQUENCY),
        seed=seeds.get("dropout", 0),
    )


def _run_name(source: str, spec: FrameworkSpec) -> str:
    backbones = spec.backbone_text + (f"+{spec.backbone_vision}" if spec.backbone_vision else "")
    return f"{source}_{spec.label()}_{backbones}_{spec.graph_kind}".replace("+", "-")


def _predictions_csv(predictions) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["doc_id", "page_index", "object_id", "true_label", "pred_label"])
    for p in predictions:
        writer.writerow([p.doc_id, p.page_index, p.object_id, p.true_label, p.pred_label])
    return out.getvalue()


def _losses_csv(losses) -> str:
    lines = ["epoch,loss"]
    lines += [f"{i},{loss:.8f}" for i, loss in enumerate(losses)]
    return "\n".join(lines) + "\n"


def cmd_train(args: argparse.Namespace) -> int:
    config_path = Path(args.config)
    try:
        manifest = json.loads(config_path.read_text(encoding="utf-8"))
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as e:
        print(f"error: config is not valid JSON: {e}", file=sys.stderr)
        return 1
    base = config_path.parent

    def resolve(p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else base / path

    if "manifest" not in manifest:
        raise SchemaError("missing field 'manifest' in run config")
    docs = corpus.ingest_manifest(resolve(manifest["manifest"]))
    tables = {}
    for modality, key in (("text", "text_embeddings"), ("vision", "vision_embeddings")):
        if key in manifest:
            tables[modality] = featstore.load_embeddings(resolve(manifest[key]), modality)
    runs = manifest.get("runs")
    if runs is None:
        runs = [manifest["run"]] if "run" in manifest else None
    if not runs:
        raise SchemaError("missing field 'runs' in run config")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    all_rows: list[metrics.ResultRow] = []
    for run in runs:
        if "source_id" not in run:
            raise SchemaError("missing field 'source_id' in run entry")
        source = run["source_id"]
        spec = _spec_from_config(run)
        config = _train_config_from(run)
        seeds = run.get("seeds", {})
        source_docs = [d for d in docs if d.source_id == source]
        text_table = tables.get("text") if spec.uses_text else None
        vision_table = tables.get("vision") if spec.uses_vision else None
        if spec.uses_text and text_table is None:
            raise SchemaError("run needs text embeddings but config names none")
        if spec.uses_vision and vision_table is None:
            raise SchemaError("run needs vision embeddings but config names none")
        plan, fold_runs = trainer.run_cross_validation(
            source_docs, spec, config, text_table, vision_table,
            split_seed=seeds.get("split", 0), init_seed=seeds.get("init", 0),
            jobs=args.jobs,
        )
        name = _run_name(source, spec)
        for fr in fold_runs:
            save_checkpoint(fr.checkpoint, out / f"{name}_fold{fr.fold}.ckpt")
            _write_atomic(out / f"{name}_fold{fr.fold}_predictions.csv", _predictions_csv(fr.predictions))
            _write_atomic(out / f"{name}_fold{fr.fold}_losses.csv", _losses_csv(fr.losses))
            all_rows.append(
                metrics.ResultRow(
                    source=source,
                    framework=spec.label(),
                    backbone_text=spec.backbone_text,
                    backbone_vision=spec.backbone_vision or "",
                    graph_kind=spec.graph_kind,
                    fold=fr.fold,
                    metrics=fr.metrics,
                )
            )
            if fr.skipped_batches:
                print(
                    f"warning: {name} fold {fr.fold}: {fr.skipped_batches} batches "
                    "had no supervised nodes and were skipped",
                    file=sys.stderr,
                )
    _write_atomic(out / "results.csv", metrics.results_csv_text(all_rows))
    print(f"wrote {len(all_rows)} result rows to {out / 'results.csv'}")
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(args: argparse.Namespace) -> int:
    root = Path(args.results)
    files = sorted(root.glob("**/results.csv"))
    if not files:
        raise EmptyResults(f"no results.csv under {root}")
    rows: list[metrics.ResultRow] = []
    for f in files:
        rows.extend(metrics.parse_results_csv(f.read_text(encoding="utf-8")))
    if not rows:
        raise EmptyResults(f"results.csv files under {root} contain no rows")
    report = metrics.render_report(rows)
    _write_atomic(root / "summary.md", report.summary_md)
    print(f"wrote {root / 'summary.md'}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="layoutgnn",
        description="Graph neural network benchmark engine for page-layout classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="validate a corpus manifest")
    p_ingest.add_argument("--manifest", required=True)
    p_ingest.add_argument("--check", action="store_true", help="validate only (default behavior)")
    p_ingest.set_defaults(func=cmd_ingest)

    p_synth = sub.add_parser("synth", help="emit a synthetic corpus and feature files")
    p_synth.add_argument("--seed", type=int, default=7)
    p_synth.add_argument("--docs", type=int, default=12)
    p_synth.add_argument("--pages", type=int, default=2)
    p_synth.add_argument("--objects", type=int, default=8)
    p_synth.add_argument("--text-dim", type=int, default=64)
    p_synth.add_argument("--vision-dim", type=int, default=64)
    p_synth.add_argument("--signal", type=float, default=0.5)
    p_synth.add_argument("--source", default="SYN")
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=cmd_synth)

    p_train = sub.add_parser("train", help="run the cross-validation protocol")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--jobs", type=int, default=1)
    p_train.set_defaults(func=cmd_train)

    p_report = sub.add_parser("report", help="aggregate results.csv into summary.md")
    p_report.add_argument("--results", required=True)
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LayoutGnnError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # runtime failure: IO, worker crash, ...
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
