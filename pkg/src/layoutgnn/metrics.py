"""Overall and per-class accuracies, fold aggregation, and report rendering.

Accuracies are fractions in [0, 1] internally and rendered as percentages
with two decimals. Aggregation over folds uses the population standard
deviation (divisor N); classes with zero support in a fold are reported
as absent and excluded from that class's aggregation.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import N_CLASSES
from .errors import EmptyInput

#: per-class column names, in label-index order
CLASS_COLUMNS = ("id", "title", "summary", "body")

RESULTS_HEADER = (
    "source", "framework", "backbone_text", "backbone_vision", "graph_kind", "fold",
    "overall", "id", "title", "summary", "body",
    "support_id", "support_title", "support_summary", "support_body",
)


@dataclass(frozen=True)
class FoldMetrics:
    overall_acc: float
    class_acc: tuple[float | None, float | None, float | None, float | None]
    support: tuple[int, int, int, int]


@dataclass(frozen=True)
class AggregateMetrics:
    n_folds: int
    overall_mean: float
    overall_std: float
    class_mean: tuple[float | None, float | None, float | None, float | None]
    class_std: tuple[float | None, float | None, float | None, float | None]
    class_folds: tuple[int, int, int, int]


def fold_metrics(predictions: Sequence[int], truths: Sequence[int]) -> FoldMetrics:
    preds = np.asarray(predictions, dtype=np.int64)
    trues = np.asarray(truths, dtype=np.int64)
    if preds.shape != trues.shape or preds.ndim != 1:
        raise EmptyInput(f"predictions {preds.shape} and truths {trues.shape} must match")
    if preds.size == 0:
        raise EmptyInput("no predictions to score")
    if trues.min() < 0 or trues.max() >= N_CLASSES or preds.min() < 0 or preds.max() >= N_CLASSES:
        raise ValueError("labels must be class indices 0..3")
    overall = float((preds == trues).mean())
    class_acc: list[float | None] = []
    support: list[int] = []
    for c in range(N_CLASSES):
        sel = trues == c
        count = int(sel.sum())
        support.append(count)
        class_acc.append(float((preds[sel] == c).mean()) if count else None)
    return FoldMetrics(overall_acc=overall, class_acc=tuple(class_acc), support=tuple(support))


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def aggregate(folds: Sequence[FoldMetrics]) -> AggregateMetrics:
    if not folds:
        raise EmptyInput("no folds to aggregate")
    overall_mean, overall_std = _mean_std([f.overall_acc for f in folds])
    class_mean: list[float | None] = []
    class_std: list[float | None] = []
    class_folds: list[int] = []
    for c in range(N_CLASSES):
        present = [f.class_acc[c] for f in folds if f.class_acc[c] is not None]
        class_folds.append(len(present))
        if present:
            m, s = _mean_std(present)  # type: ignore[arg-type]
            class_mean.append(m)
            class_std.append(s)
        else:
            class_mean.append(None)
            class_std.append(None)
    return AggregateMetrics(
        n_folds=len(folds),
        overall_mean=overall_mean,
        overall_std=overall_std,
        class_mean=tuple(class_mean),
        class_std=tuple(class_std),
        class_folds=tuple(class_folds),
    )


# ---------------------------------------------------------------------------
# result rows and report files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResultRow:
    """One fold of one configuration; mirrors one results.csv line."""

    source: str
    framework: str
    backbone_text: str
    backbone_vision: str  # "" when the framework has no vision branch
    graph_kind: str
    fold: int
    metrics: FoldMetrics

    def config_key(self) -> tuple[str, str, str, str, str]:
        return (self.source, self.framework, self.backbone_text, self.backbone_vision, self.graph_kind)


def format_pct(x: float) -> str:
    return f"{100.0 * x:.2f}"


def format_mean_std(mean: float, std: float) -> str:
    return f"{100.0 * mean:.2f}_{{{100.0 * std:.2f}}}"


def _fmt_acc(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def results_csv_text(rows: Sequence[ResultRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RESULTS_HEADER)
    for r in rows:
        m = r.metrics
        writer.writerow(
            [r.source, r.framework, r.backbone_text, r.backbone_vision, r.graph_kind, r.fold,
             f"{m.overall_acc:.6f}", *(_fmt_acc(a) for a in m.class_acc), *m.support]
        )
    return out.getvalue()


def parse_results_csv(text: str) -> list[ResultRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != RESULTS_HEADER:
        raise EmptyInput(f"unexpected results.csv header: {header}")
    rows = []
    for rec in reader:
        vals = dict(zip(RESULTS_HEADER, rec))
        metrics = FoldMetrics(
            overall_acc=float(vals["overall"]),
            class_acc=tuple(float(vals[c]) if vals[c] else None for c in CLASS_COLUMNS),
            support=tuple(int(vals[f"support_{c}"]) for c in CLASS_COLUMNS),
        )
        rows.append(
            ResultRow(
                source=vals["source"],
                framework=vals["framework"],
                backbone_text=vals["backbone_text"],
                backbone_vision=vals["backbone_vision"],
                graph_kind=vals["graph_kind"],
                fold=int(vals["fold"]),
                metrics=metrics,
            )
        )
    return rows


def _md_table(header: list[str], body: list[list[str]]) -> str:
    widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h) for i, h in enumerate(header)]
    lines = [
        "| " + " | ".join(h.ljust(w) for h, w in zip(header, widths)) + " |",
        "|-" + "-|-".join("-" * w for w in widths) + "-|",
    ]
    for row in body:
        lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ReportFiles:
    results_csv: str
    summary_md: str


def render_report(rows: Sequence[ResultRow]) -> ReportFiles:
    """Machine CSV plus an aligned Markdown summary aggregated per
    configuration, accuracies as mean_{std} percentages."""
    if not rows:
        raise EmptyInput("no result rows to render")
    groups: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        groups.setdefault(r.config_key(), []).append(r)
    header = ["Source", "Framework", "Backbones", "Graph", "Folds",
              "Overall", "ID", "Title", "Summary", "Body"]
    body = []
    for key in sorted(groups):
        source, framework, bb_text, bb_vision, graph_kind = key
        folds = sorted(groups[key], key=lambda r: r.fold)
        agg = aggregate([r.metrics for r in folds])
        backbones = f"{bb_text}+{bb_vision}" if bb_vision else bb_text
        cells = [source, framework, backbones, graph_kind, str(agg.n_folds),
                 format_mean_std(agg.overall_mean, agg.overall_std)]
        for c in range(N_CLASSES):
            if agg.class_mean[c] is None:
                cells.append("absent")
            else:
                cells.append(format_mean_std(agg.class_mean[c], agg.class_std[c]))
        body.append(cells)
    md = (
        "# Classification accuracy summary\n\n"
        + _md_table(header, body)
        + "\nAccuracies are percentages, shown as mean_{std} across folds; "
        "std is the population standard deviation (divisor N). Classes with "
        "zero support in every fold of a configuration are marked absent.\n"
    )
    ordered = sorted(rows, key=lambda r: (r.config_key(), r.fold))
    return ReportFiles(results_csv=results_csv_text(ordered), summary_md=md)
