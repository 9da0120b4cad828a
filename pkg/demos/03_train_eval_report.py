"""End-to-end benchmark run at desk scale.

Trains a dual-branch GraphSAGE model with 5-fold document-level cross
validation on a separable synthetic corpus, then renders the report
tables. Uses a reduced epoch budget so the demo finishes in well under a
minute; the full protocol default is 350 epochs.
"""

import numpy as np

from layoutgnn import corpus, featstore, metrics
from layoutgnn.frameworks import FrameworkSpec
from layoutgnn.trainer import TrainConfig, run_cross_validation

docs = corpus.make_synthetic_corpus(seed=21, n_docs=20, pages_per_doc=1, objects_per_page=10)
text = featstore.synth_embeddings(docs, "text", dim=48, seed=21, signal=0.5)
vision = featstore.synth_embeddings(docs, "vision", dim=48, seed=21, signal=0.5)

spec = FrameworkSpec(
    kind="dual", backbone_text="sage", backbone_vision="sage",
    graph_kind="k_closest", hidden=32, head_hidden=16, depth=2,
)
config = TrainConfig(epochs=80, batch_pages=8, seed=5)

plan, runs = run_cross_validation(
    docs, spec, config, text, vision, split_seed=1, init_seed=2,
)
print(f"source {plan.source_id}: "
      f"{len(plan.folds)} folds over {len(docs)} documents, {config.epochs} epochs each")
for run in runs:
    print(f"  fold {run.fold}: overall {run.metrics.overall_acc:.3f}, "
          f"loss {run.losses[0]:.3f} -> {run.losses[-1]:.3f}")

rows = [
    metrics.ResultRow(
        source=plan.source_id, framework=spec.label(),
        backbone_text=spec.backbone_text, backbone_vision=spec.backbone_vision or "",
        graph_kind=spec.graph_kind, fold=run.fold, metrics=run.metrics,
    )
    for run in runs
]
report = metrics.render_report(rows)
print("\nmean test accuracy:", round(float(np.mean([r.metrics.overall_acc for r in runs])), 4))
print("\n--- summary.md ---------------------------------------------------")
print(report.summary_md)
