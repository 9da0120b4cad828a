import json

import numpy as np

from layoutgnn import corpus, featstore, metrics
from layoutgnn.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


def synth_dataset(tmp_path, docs=6, pages=1, objects=6, seed=3):
    out = tmp_path / "data"
    code = run_cli(
        "synth", "--seed", seed, "--docs", docs, "--pages", pages, "--objects", objects,
        "--text-dim", "16", "--vision-dim", "16", "--out", out,
    )
    assert code == 0
    return out


def train_config(data_dir, **overrides):
    run = {
        "source_id": "SYN",
        "framework": "dual",
        "backbone_text": "sage",
        "backbone_vision": "sage",
        "graph": {"kind": "k_closest", "k": 4},
        "depth": 2,
        "hidden": 8,
        "head_hidden": 6,
        "epochs": 3,
        "lr": 1e-3,
        "momentum": 0.9,
        "dropout": 0.1,
        "batch_pages": 4,
        "class_weight_mode": "inverse_frequency",
        "seeds": {"split": 1, "init": 2, "dropout": 3},
    }
    run.update(overrides)
    return {
        "manifest": str(data_dir / "corpus.json"),
        "text_embeddings": str(data_dir / "text.emb1"),
        "vision_embeddings": str(data_dir / "vision.emb1"),
        "runs": [run],
    }


class TestSynth:
    def test_outputs_load_cleanly(self, tmp_path):
        out = synth_dataset(tmp_path)
        docs = corpus.ingest_manifest(out / "corpus.json")
        for modality in ("text", "vision"):
            table = featstore.load_embeddings(out / f"{modality}.emb1", modality)
            for doc in docs:
                for page in doc.pages:
                    featstore.page_features(table, page)  # full coverage

    def test_rerun_byte_identical(self, tmp_path):
        out1 = synth_dataset(tmp_path / "a")
        out2 = synth_dataset(tmp_path / "b")
        for name in ("corpus.json", "text.emb1", "vision.emb1"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_single_object_pages(self, tmp_path):
        out = synth_dataset(tmp_path, docs=2, objects=1)
        docs = corpus.ingest_manifest(out / "corpus.json")
        assert all(len(p.objects) == 1 for d in docs for p in d.pages)


class TestIngest:
    def test_valid_manifest_exit_zero(self, tmp_path, capsys):
        out = synth_dataset(tmp_path)
        assert run_cli("ingest", "--manifest", out / "corpus.json", "--check") == 0
        assert "documents: 6" in capsys.readouterr().out

    def test_bad_bbox_exit_one_names_object(self, tmp_path, capsys):
        raw = {
            "documents": [
                {
                    "doc_id": "d",
                    "source_id": "S",
                    "pages": [
                        {
                            "page_index": 0,
                            "width": 100.0,
                            "height": 100.0,
                            "objects": [
                                {
                                    "object_id": "bad-obj",
                                    "bbox": [5.0, 5.0, 5.0, 20.0],
                                    "category": "body",
                                    "text": "x",
                                    "cells": None,
                                }
                            ],
                        }
                    ],
                }
            ]
        }
        path = tmp_path / "m.json"
        path.write_text(json.dumps(raw))
        assert run_cli("ingest", "--manifest", path) == 1
        assert "bad-obj" in capsys.readouterr().err

    def test_unreadable_manifest(self, tmp_path):
        assert run_cli("ingest", "--manifest", tmp_path / "missing.json") == 1


class TestTrain:
    def test_five_rows_and_artifacts(self, tmp_path):
        data = synth_dataset(tmp_path)
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps(train_config(data)))
        out = tmp_path / "results"
        assert run_cli("train", "--config", cfg, "--out", out) == 0
        rows = metrics.parse_results_csv((out / "results.csv").read_text())
        assert len(rows) == 5
        assert sorted(r.fold for r in rows) == [0, 1, 2, 3, 4]
        for f in range(5):
            stem = f"SYN_dual_sage-sage_k_closest_fold{f}"
            assert (out / f"{stem}.ckpt").exists()
            assert (out / f"{stem}_predictions.csv").exists()
            assert (out / f"{stem}_losses.csv").exists()
        preds = (out / "SYN_dual_sage-sage_k_closest_fold0_predictions.csv").read_text().splitlines()
        assert preds[0] == "doc_id,page_index,object_id,true_label,pred_label"

    def test_rerun_byte_identical_results(self, tmp_path):
        data = synth_dataset(tmp_path)
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps(train_config(data)))
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert run_cli("train", "--config", cfg, "--out", out1) == 0
        assert run_cli("train", "--config", cfg, "--out", out2) == 0
        assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()

    def test_single_vision_dispatch(self, tmp_path):
        data = synth_dataset(tmp_path)
        cfg = tmp_path / "run.json"
        overrides = {"framework": "single", "modality": "vision", "backbone_vision": None}
        run = train_config(data, **overrides)
        run["runs"][0].pop("backbone_vision")
        cfg.write_text(json.dumps(run))
        out = tmp_path / "results"
        assert run_cli("train", "--config", cfg, "--out", out) == 0
        rows = metrics.parse_results_csv((out / "results.csv").read_text())
        assert all(r.framework == "single_vision" for r in rows)

    def test_invalid_config_exit_one(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"runs": []}))
        assert run_cli("train", "--config", cfg, "--out", tmp_path / "o") == 1


class TestReport:
    def test_aggregates_hand_built_results(self, tmp_path, capsys):
        rows = []
        overalls = [0.9, 1.0, 0.8, 0.95, 0.85]
        for f, overall in enumerate(overalls):
            m = metrics.FoldMetrics(overall, (overall, None, None, None), (10, 0, 0, 0))
            rows.append(metrics.ResultRow("S", "concat", "gcn", "", "complete", f, m))
        out = tmp_path / "results"
        out.mkdir()
        (out / "results.csv").write_text(metrics.results_csv_text(rows))
        assert run_cli("report", "--results", out) == 0
        summary = (out / "summary.md").read_text()
        mean = np.mean(overalls)
        std = np.std(overalls)
        assert metrics.format_mean_std(mean, std) in summary

    def test_two_configs_two_rows(self, tmp_path):
        m = metrics.FoldMetrics(0.9, (0.9, None, None, None), (10, 0, 0, 0))
        rows = [
            metrics.ResultRow("S", "concat", "gcn", "", "complete", 0, m),
            metrics.ResultRow("S", "dual", "sage", "tagcn", "k_closest", 0, m),
        ]
        out = tmp_path / "results"
        out.mkdir()
        (out / "results.csv").write_text(metrics.results_csv_text(rows))
        assert run_cli("report", "--results", out) == 0
        lines = [l for l in (out / "summary.md").read_text().splitlines() if l.startswith("| S ")]
        assert len(lines) == 2

    def test_empty_results_exit_one(self, tmp_path):
        empty = tmp_path / "nothing"
        empty.mkdir()
        assert run_cli("report", "--results", empty) == 1

    def test_report_idempotent(self, tmp_path):
        m = metrics.FoldMetrics(0.9, (0.9, None, None, None), (10, 0, 0, 0))
        out = tmp_path / "results"
        out.mkdir()
        (out / "results.csv").write_text(
            metrics.results_csv_text([metrics.ResultRow("S", "concat", "gcn", "", "complete", 0, m)])
        )
        assert run_cli("report", "--results", out) == 0
        first = (out / "summary.md").read_bytes()
        assert run_cli("report", "--results", out) == 0
        assert (out / "summary.md").read_bytes() == first
