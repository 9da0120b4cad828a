"""Graph neural network benchmark engine for page-layout object
classification: page graphs over layout objects, multimodal node features,
four message-passing backbones under three fusion frameworks, and a
5-fold document-level cross-validation protocol with report tables.
"""

from . import corpus, featstore, frameworks, gnn, graphbuild, metrics, nncore, trainer
from .corpus import (
    BBox,
    Category,
    Document,
    LayoutObject,
    Page,
    ingest_manifest,
    make_synthetic_corpus,
    write_manifest,
)
from .featstore import EmbeddingTable, load_embeddings, synth_embeddings, write_embeddings
from .frameworks import FrameworkSpec, ModelState, forward_page, init_model
from .graphbuild import PageGraph, build_complete, build_k_closest, normalize
from .metrics import aggregate, fold_metrics, render_report
from .trainer import SplitPlan, TrainConfig, class_weights, evaluate, make_splits, train_fold

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "Category",
    "Document",
    "EmbeddingTable",
    "FrameworkSpec",
    "LayoutObject",
    "ModelState",
    "Page",
    "PageGraph",
    "SplitPlan",
    "TrainConfig",
    "aggregate",
    "build_complete",
    "build_k_closest",
    "class_weights",
    "corpus",
    "evaluate",
    "featstore",
    "fold_metrics",
    "forward_page",
    "frameworks",
    "gnn",
    "graphbuild",
    "ingest_manifest",
    "init_model",
    "load_embeddings",
    "make_splits",
    "make_synthetic_corpus",
    "metrics",
    "nncore",
    "normalize",
    "render_report",
    "synth_embeddings",
    "trainer",
    "train_fold",
    "write_embeddings",
    "write_manifest",
]
