"""Experimental protocol: per-source models, document-level 5-fold splits,
page-batched epochs with a weighted cross-entropy, SGD with momentum, and
page-level evaluation.

Seeds are explicit and split by purpose: the split seed fixes fold
membership, the init seed (spawned per fold) fixes weight initialization,
and the train seed (spawned per fold) drives page shuffling and dropout.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Document, LABEL_INDEX, LABEL_NAMES, N_CLASSES, Page, TEXT_CLASSES
from .errors import FoldError, SpecError
from .featstore import EmbeddingTable, page_features
from .frameworks import (
    FrameworkSpec,
    ModelState,
    backward_page,
    forward_page_cached,
    init_model,
    model_records,
)
from .graphbuild import K_CLOSEST, PageGraph, build_complete, build_k_closest
from .metrics import FoldMetrics, fold_metrics
from .nncore import EVAL, TRAIN, sgd_step, weighted_ce_parts

N_FOLDS = 5

INVERSE_FREQUENCY = "inverse_frequency"
UNIFORM = "uniform"


@dataclass(frozen=True)
class Fold:
    train_doc_ids: tuple[str, ...]
    test_doc_ids: tuple[str, ...]


@dataclass(frozen=True)
class SplitPlan:
    source_id: str
    folds: tuple[Fold, ...]
    seed: int


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 350
    lr: float = 1e-3
    momentum: float = 0.9
    dropout: float = 0.1
    batch_pages: int = 16
    class_weight_mode: str = INVERSE_FREQUENCY
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise SpecError("epochs must be >= 1")
        if self.lr <= 0 or self.momentum < 0 or self.batch_pages < 1:
            raise SpecError("lr must be positive, momentum >= 0, batch_pages >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise SpecError("dropout must be in [0, 1)")
        if self.class_weight_mode not in (INVERSE_FREQUENCY, UNIFORM):
            raise SpecError(f"unknown class_weight_mode {self.class_weight_mode!r}")


def make_splits(docs: Sequence[Document], seed: int) -> SplitPlan:
    """Shuffle documents with a seeded generator and slice five near-equal
    test folds; the first (n mod 5) folds take the extra document."""
    if not docs:
        raise FoldError("no documents to split")
    sources = {d.source_id for d in docs}
    if len(sources) != 1:
        raise FoldError(f"split needs a single source, got {sorted(sources)}")
    if len(docs) < N_FOLDS:
        raise FoldError(f"need at least {N_FOLDS} documents, got {len(docs)}")
    rng = np.random.default_rng(np.random.SeedSequence([0x5917, seed]))
    ids = [d.doc_id for d in docs]
    order = [ids[i] for i in rng.permutation(len(ids))]
    base, extra = divmod(len(order), N_FOLDS)
    folds = []
    start = 0
    for f in range(N_FOLDS):
        size = base + (1 if f < extra else 0)
        test = tuple(order[start : start + size])
        start += size
        train = tuple(i for i in order if i not in test)
        folds.append(Fold(train_doc_ids=train, test_doc_ids=test))
    return SplitPlan(source_id=next(iter(sources)), folds=tuple(folds), seed=seed)


def _weights_from_counts(counts: np.ndarray, mode: str) -> np.ndarray:
    if mode == UNIFORM:
        return np.ones(N_CLASSES)
    if mode != INVERSE_FREQUENCY:
        raise SpecError(f"unknown class_weight_mode {mode!r}")
    counts = counts.astype(np.float64)
    if np.any(counts == 0):
        counts = counts + 1.0  # add-one fallback for absent classes
    inv = 1.0 / counts
    return inv / inv.mean()


def class_weights(pages: Sequence[Page], mode: str = INVERSE_FREQUENCY) -> np.ndarray:
    """Per-class loss weights from text-class frequencies, rescaled to mean 1."""
    counts = np.zeros(N_CLASSES)
    for page in pages:
        for obj in page.objects:
            if obj.category in TEXT_CLASSES:
                counts[LABEL_INDEX[obj.category]] += 1
    return _weights_from_counts(counts, mode)


# ---------------------------------------------------------------------------
# page examples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PageExample:
    """One page with everything a forward pass needs."""

    doc_id: str
    page_index: int
    object_ids: tuple[str, ...]
    labels: np.ndarray  # (n,) int64, -1 for unsupervised nodes
    graph: PageGraph
    x_t: np.ndarray | None
    x_v: np.ndarray | None

    @property
    def mask(self) -> np.ndarray:
        return self.labels >= 0


def page_labels(page: Page) -> np.ndarray:
    return np.array(
        [LABEL_INDEX.get(obj.category, -1) for obj in page.objects], dtype=np.int64
    )


def build_examples(
    docs: Sequence[Document],
    spec: FrameworkSpec,
    text_table: EmbeddingTable | None,
    vision_table: EmbeddingTable | None,
) -> list[PageExample]:
    """Graphs of the spec's kind plus feature matrices for the modalities
    the framework consumes."""
    examples = []
    for doc in docs:
        for page in doc.pages:
            if spec.graph_kind == K_CLOSEST:
                graph = build_k_closest(page, spec.k)
            else:
                graph = build_complete(page)
            x_t = page_features(text_table, page) if spec.uses_text else None
            x_v = page_features(vision_table, page) if spec.uses_vision else None
            examples.append(
                PageExample(
                    doc_id=doc.doc_id,
                    page_index=page.page_index,
                    object_ids=tuple(o.object_id for o in page.objects),
                    labels=page_labels(page),
                    graph=graph,
                    x_t=x_t,
                    x_v=x_v,
                )
            )
    return examples


def _example_counts(examples: Sequence[PageExample]) -> np.ndarray:
    counts = np.zeros(N_CLASSES)
    for ex in examples:
        for c in range(N_CLASSES):
            counts[c] += int((ex.labels == c).sum())
    return counts


# ---------------------------------------------------------------------------
# training and evaluation
# ---------------------------------------------------------------------------

@dataclass
class TrainResult:
    losses: list[float] = field(default_factory=list)
    skipped_batches: int = 0


def train_fold(state: ModelState, examples: Sequence[PageExample], config: TrainConfig) -> TrainResult:
    """Page-batched epochs: forward every page of a batch, normalize the
    accumulated weighted-CE gradient by the batch's total applied weight,
    backprop per page, then one SGD step per batch."""
    weights = _weights_from_counts(_example_counts(examples), config.class_weight_mode)
    rng = np.random.default_rng(np.random.SeedSequence([0x7321, config.seed]))
    result = TrainResult()
    params = list(state.parameters())
    has_mask = [bool(ex.mask.any()) for ex in examples]
    for _epoch in range(config.epochs):
        order = rng.permutation(len(examples))
        epoch_loss = 0.0
        epoch_weight = 0.0
        for start in range(0, len(order), config.batch_pages):
            batch = [int(i) for i in order[start : start + config.batch_pages]]
            if not any(has_mask[i] for i in batch):
                result.skipped_batches += 1
                continue
            page_passes = []
            batch_loss = 0.0
            batch_weight = 0.0
            for i in batch:
                ex = examples[i]
                logits, cache = forward_page_cached(
                    state, ex.graph, ex.x_t, ex.x_v, TRAIN, rng, config.dropout
                )
                loss_sum, weight_sum, draw = weighted_ce_parts(
                    logits, ex.labels, weights, ex.mask
                )
                page_passes.append((cache, draw))
                batch_loss += loss_sum
                batch_weight += weight_sum
            for cache, draw in page_passes:
                backward_page(state, cache, draw / batch_weight)
            sgd_step(params, config.lr, config.momentum)
            epoch_loss += batch_loss
            epoch_weight += batch_weight
        result.losses.append(epoch_loss / epoch_weight if epoch_weight > 0 else float("nan"))
    return result


@dataclass(frozen=True)
class Prediction:
    doc_id: str
    page_index: int
    object_id: str
    true_label: str
    pred_label: str


@dataclass
class EvalResult:
    predictions: list[Prediction]
    metrics: FoldMetrics


def evaluate(state: ModelState, examples: Sequence[PageExample]) -> EvalResult:
    """Eval-mode forward over every page; argmax per supervised node with
    ties broken toward the lowest class index."""
    predictions = []
    pred_idx = []
    true_idx = []
    for ex in examples:
        logits, _ = forward_page_cached(state, ex.graph, ex.x_t, ex.x_v, EVAL, None, 0.0)
        preds = np.argmax(logits, axis=1)
        for node in np.flatnonzero(ex.mask):
            t = int(ex.labels[node])
            p = int(preds[node])
            true_idx.append(t)
            pred_idx.append(p)
            predictions.append(
                Prediction(
                    doc_id=ex.doc_id,
                    page_index=ex.page_index,
                    object_id=ex.object_ids[node],
                    true_label=LABEL_NAMES[t],
                    pred_label=LABEL_NAMES[p],
                )
            )
    return EvalResult(predictions=predictions, metrics=fold_metrics(pred_idx, true_idx))


# ---------------------------------------------------------------------------
# cross-validation driver
# ---------------------------------------------------------------------------

@dataclass
class FoldRun:
    fold: int
    metrics: FoldMetrics
    predictions: list[Prediction]
    losses: list[float]
    skipped_batches: int
    checkpoint: list[tuple[str, np.ndarray]]


def _fold_seeds(root: int, n: int) -> list[int]:
    return [int(ss.generate_state(1)[0]) for ss in np.random.SeedSequence([0xF01D, root]).spawn(n)]


def run_fold(
    docs: Sequence[Document],
    spec: FrameworkSpec,
    config: TrainConfig,
    text_table: EmbeddingTable | None,
    vision_table: EmbeddingTable | None,
    fold: Fold,
    fold_index: int,
    init_seed: int,
    train_seed: int,
) -> FoldRun:
    by_id = {d.doc_id: d for d in docs}
    train_docs = [by_id[i] for i in fold.train_doc_ids]
    test_docs = [by_id[i] for i in fold.test_doc_ids]
    train_examples = build_examples(train_docs, spec, text_table, vision_table)
    test_examples = build_examples(test_docs, spec, text_table, vision_table)
    text_dim = text_table.dim if spec.uses_text else None
    vision_dim = vision_table.dim if spec.uses_vision else None
    state = init_model(spec, text_dim=text_dim, vision_dim=vision_dim, seed=init_seed)
    fold_config = TrainConfig(
        epochs=config.epochs, lr=config.lr, momentum=config.momentum,
        dropout=config.dropout, batch_pages=config.batch_pages,
        class_weight_mode=config.class_weight_mode, seed=train_seed,
    )
    outcome = train_fold(state, train_examples, fold_config)
    eval_result = evaluate(state, test_examples)
    return FoldRun(
        fold=fold_index,
        metrics=eval_result.metrics,
        predictions=eval_result.predictions,
        losses=outcome.losses,
        skipped_batches=outcome.skipped_batches,
        checkpoint=model_records(state),
    )


def _run_fold_task(payload) -> FoldRun:
    return run_fold(*payload)


def run_cross_validation(
    docs: Sequence[Document],
    spec: FrameworkSpec,
    config: TrainConfig,
    text_table: EmbeddingTable | None,
    vision_table: EmbeddingTable | None,
    split_seed: int,
    init_seed: int,
    jobs: int = 1,
) -> tuple[SplitPlan, list[FoldRun]]:
    """Fresh weights per fold from spawned seeds; fold results are ordered
    by fold index so the output is identical for any worker count."""
    plan = make_splits(docs, split_seed)
    init_seeds = _fold_seeds(init_seed, N_FOLDS)
    train_seeds = _fold_seeds(config.seed, N_FOLDS)
    payloads = [
        (docs, spec, config, text_table, vision_table, fold, f, init_seeds[f], train_seeds[f])
        for f, fold in enumerate(plan.folds)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_fold_task, payloads))
    else:
        runs = [run_fold(*p) for p in payloads]
    runs.sort(key=lambda r: r.fold)
    return plan, runs
