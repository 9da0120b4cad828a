import numpy as np
import pytest

from layoutgnn.errors import EmptyInput
from layoutgnn.metrics import (
    FoldMetrics,
    ResultRow,
    aggregate,
    fold_metrics,
    format_mean_std,
    format_pct,
    parse_results_csv,
    render_report,
    results_csv_text,
)

# label indices: 0 = id, 1 = title, 2 = summary, 3 = body


class TestFoldMetrics:
    def test_hand_count(self):
        truths = [0, 0, 3, 3]
        preds = [0, 3, 3, 3]
        m = fold_metrics(preds, truths)
        assert m.overall_acc == 0.75
        assert m.class_acc[0] == 0.5
        assert m.class_acc[3] == 1.0
        assert m.class_acc[1] is None and m.class_acc[2] is None
        assert m.support == (2, 0, 0, 2)

    def test_perfect_predictions(self):
        m = fold_metrics([0, 1, 2, 3], [0, 1, 2, 3])
        assert m.overall_acc == 1.0
        assert all(a == 1.0 for a in m.class_acc)

    def test_single_class_overall_equals_class_acc(self):
        m = fold_metrics([1, 1, 2], [1, 1, 1])
        assert m.overall_acc == m.class_acc[1]

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            fold_metrics([], [])

    def test_recount_oracle_random_dumps(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(1, 60))
            truths = rng.integers(0, 4, size=n)
            preds = rng.integers(0, 4, size=n)
            m = fold_metrics(preds, truths)
            assert m.overall_acc == pytest.approx(float(np.mean(preds == truths)))
            for c in range(4):
                sel = truths == c
                assert m.support[c] == int(sel.sum())
                if sel.any():
                    assert m.class_acc[c] == pytest.approx(float(np.mean(preds[sel] == c)))
                else:
                    assert m.class_acc[c] is None


class TestAggregate:
    def test_identical_folds_zero_std(self):
        m = fold_metrics([0, 1], [0, 1])
        agg = aggregate([m, m, m])
        assert agg.overall_std == 0.0 and agg.overall_mean == 1.0

    def test_two_point_formula(self):
        a = FoldMetrics(0.9, (0.9, None, None, None), (10, 0, 0, 0))
        b = FoldMetrics(1.0, (1.0, None, None, None), (10, 0, 0, 0))
        agg = aggregate([a, b])
        assert agg.overall_mean == pytest.approx(0.95)
        assert agg.overall_std == pytest.approx(0.05)  # population std of {0.9, 1.0}

    def test_single_fold(self):
        m = fold_metrics([0, 0, 1], [0, 1, 1])
        agg = aggregate([m])
        assert agg.overall_mean == m.overall_acc and agg.overall_std == 0.0

    def test_permutation_invariant(self):
        ms = [
            FoldMetrics(0.8, (0.8, 0.7, None, 0.9), (5, 5, 0, 5)),
            FoldMetrics(0.6, (0.5, 0.9, 0.2, None), (5, 5, 5, 0)),
            FoldMetrics(0.7, (0.7, None, 0.4, 0.8), (5, 0, 5, 5)),
        ]
        assert aggregate(ms) == aggregate(ms[::-1])

    def test_absent_class_excluded(self):
        a = FoldMetrics(1.0, (1.0, None, None, None), (3, 0, 0, 0))
        b = FoldMetrics(1.0, (0.5, 0.25, None, None), (4, 4, 0, 0))
        agg = aggregate([a, b])
        assert agg.class_folds == (2, 1, 0, 0)
        assert agg.class_mean[0] == pytest.approx(0.75)
        assert agg.class_mean[1] == pytest.approx(0.25)
        assert agg.class_mean[2] is None

    def test_empty(self):
        with pytest.raises(EmptyInput):
            aggregate([])


def row(fold=0, overall=0.9748, accs=(0.9981, 0.9370, 0.9581, 0.9825), **kw):
    defaults = dict(source="SRC-A", framework="dual", backbone_text="sage",
                    backbone_vision="sage", graph_kind="k_closest")
    defaults.update(kw)
    metrics = FoldMetrics(overall, accs, (40, 30, 20, 50))
    return ResultRow(fold=fold, metrics=metrics, **defaults)


class TestRender:
    def test_percent_formatting(self):
        assert format_pct(0.9748) == "97.48"
        assert format_pct(1.0) == "100.00"

    def test_mean_std_formatting(self):
        assert format_mean_std(0.9840, 0.0081) == "98.40_{0.81}"
        assert format_mean_std(0.9793, 0.0203) == "97.93_{2.03}"

    def test_baseline_row_strings(self):
        report = render_report([row()])
        for token in ("97.48", "99.81", "93.70", "95.81", "98.25"):
            assert token in report.summary_md

    def test_single_config_aggregates_to_one_row(self):
        rows = [row(fold=f) for f in range(5)]
        report = render_report(rows)
        table_lines = [l for l in report.summary_md.splitlines() if l.startswith("| SRC")]
        assert len(table_lines) == 1
        assert "97.48_{0.00}" in table_lines[0]

    def test_rows_sorted_by_configuration(self):
        rows = [
            row(framework="single_text", backbone_vision=""),
            row(framework="concat", backbone_vision=""),
            row(framework="dual"),
        ]
        report = render_report(rows)
        lines = [l for l in report.summary_md.splitlines() if l.startswith("| SRC")]
        order = [l.split("|")[2].strip() for l in lines]
        assert order == sorted(order)

    def test_csv_roundtrip_six_decimals(self):
        rng = np.random.default_rng(1)
        rows = []
        for f in range(5):
            accs = tuple(float(a) for a in rng.random(4))
            rows.append(row(fold=f, overall=float(rng.random()), accs=accs))
        text = results_csv_text(rows)
        parsed = parse_results_csv(text)
        for a, b in zip(rows, parsed):
            assert a.config_key() == b.config_key() and a.fold == b.fold
            assert abs(a.metrics.overall_acc - b.metrics.overall_acc) < 1e-6
            for x, y in zip(a.metrics.class_acc, b.metrics.class_acc):
                assert abs(x - y) < 1e-6
            assert a.metrics.support == b.metrics.support
        assert results_csv_text(parsed) == text

    def test_absent_class_render(self):
        metrics = FoldMetrics(1.0, (1.0, None, None, 1.0), (3, 0, 0, 4))
        r = ResultRow("S", "single_text", "gcn", "", "complete", 0, metrics)
        report = render_report([r])
        assert "absent" in report.summary_md
        parsed = parse_results_csv(report.results_csv)
        assert parsed[0].metrics.class_acc[1] is None

    def test_empty_rows(self):
        with pytest.raises(EmptyInput):
            render_report([])
