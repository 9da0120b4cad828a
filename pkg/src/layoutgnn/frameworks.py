"""The three classification frameworks assembled from GNN blocks.

* ``single``: one branch over one modality's features, one affine head.
* ``concat``: one branch over the concatenated text+vision features, one
  affine head.
* ``dual``: a dedicated branch per modality; branch outputs concatenated
  and passed through two affine layers with an ELU between.

Every node of a page participates in message passing; logits exist for
all nodes, but only text-class nodes receive supervision (the loss mask
lives in the trainer).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .corpus import N_CLASSES
from .errors import CoverageError, ShapeError, SpecError
from .gnn import (
    BACKBONES,
    GnnLayerSpec,
    GraphOps,
    block_backward,
    block_forward,
    init_layer_params,
)
from .graphbuild import COMPLETE, K_CLOSEST, PageGraph
from .nncore import (
    EVAL,
    BatchNormState,
    ParamTensor,
    glorot_uniform,
    linear_backward,
    linear_forward,
    elu_backward,
    elu_forward,
    load_checkpoint,
    save_checkpoint,
)

SINGLE = "single"
CONCAT = "concat"
DUAL = "dual"
FRAMEWORKS = (SINGLE, CONCAT, DUAL)

TEXT = "text"
VISION = "vision"


@dataclass(frozen=True)
class FrameworkSpec:
    """Architecture configuration; ``backbone_text`` names the backbone of
    the only branch for single/concat frameworks."""

    kind: str
    backbone_text: str
    backbone_vision: str | None = None
    modality: str | None = None  # single only
    graph_kind: str = K_CLOSEST
    k: int = 4
    depth: int = 2
    hidden: int = 256
    head_hidden: int = 128
    heads: int = 4
    hops: int = 3
    leaky_slope: float = 0.2

    def __post_init__(self) -> None:
        if self.kind not in FRAMEWORKS:
            raise SpecError(f"unknown framework {self.kind!r}")
        if self.backbone_text not in BACKBONES:
            raise SpecError(f"unknown backbone {self.backbone_text!r}")
        if self.kind == SINGLE:
            if self.modality not in (TEXT, VISION):
                raise SpecError("single framework needs modality 'text' or 'vision'")
        elif self.modality is not None:
            raise SpecError(f"{self.kind} framework does not take a modality")
        if self.kind == DUAL:
            if self.backbone_vision not in BACKBONES:
                raise SpecError("dual framework needs backbone_vision")
        elif self.backbone_vision is not None:
            raise SpecError(f"{self.kind} framework does not take backbone_vision")
        if self.graph_kind not in (K_CLOSEST, COMPLETE):
            raise SpecError(f"unknown graph kind {self.graph_kind!r}")
        if self.depth < 1 or self.hidden < 1 or self.head_hidden < 1 or self.k < 1:
            raise SpecError("depth, hidden, head_hidden and k must be >= 1")

    @property
    def uses_text(self) -> bool:
        return self.kind in (CONCAT, DUAL) or self.modality == TEXT

    @property
    def uses_vision(self) -> bool:
        return self.kind in (CONCAT, DUAL) or self.modality == VISION

    def label(self) -> str:
        return f"{SINGLE}_{self.modality}" if self.kind == SINGLE else self.kind


@dataclass
class ModelState:
    """Everything trainable plus batch-norm running state, with stable
    parameter names defining the checkpoint order."""

    spec: FrameworkSpec
    text_dim: int | None
    vision_dim: int | None
    params: dict[str, ParamTensor] = field(default_factory=dict)
    bn: dict[str, BatchNormState] = field(default_factory=dict)
    branch_specs: dict[str, list[GnnLayerSpec]] = field(default_factory=dict)
    _block_cache: dict[tuple[str, int], dict[str, ParamTensor]] = field(
        default_factory=dict, repr=False
    )

    def parameters(self) -> Iterator[ParamTensor]:
        return iter(self.params.values())

    def block_params(self, branch: str, i: int) -> dict[str, ParamTensor]:
        cached = self._block_cache.get((branch, i))
        if cached is None:
            prefix = f"{branch}.b{i}."
            cached = {
                name[len(prefix):]: p
                for name, p in self.params.items()
                if name.startswith(prefix) and ".bn." not in name
            }
            self._block_cache[(branch, i)] = cached
        return cached


def _branch_layer_specs(spec: FrameworkSpec, backbone: str, in_dim: int) -> list[GnnLayerSpec]:
    dims = [in_dim] + [spec.hidden] * spec.depth
    return [
        GnnLayerSpec(
            kind=backbone,
            in_dim=dims[i],
            out_dim=dims[i + 1],
            heads=spec.heads,
            hops=spec.hops,
            leaky_slope=spec.leaky_slope,
        )
        for i in range(spec.depth)
    ]


def _branch_plan(spec: FrameworkSpec, text_dim: int | None, vision_dim: int | None):
    """(branch name, backbone, input dim, feature source) per branch."""
    if spec.kind == SINGLE:
        dim = text_dim if spec.modality == TEXT else vision_dim
        if dim is None:
            raise SpecError(f"single-{spec.modality} framework needs a {spec.modality} dim")
        return [("branch", spec.backbone_text, dim, spec.modality)]
    if spec.kind == CONCAT:
        if text_dim is None or vision_dim is None:
            raise SpecError("concat framework needs both text and vision dims")
        return [("branch", spec.backbone_text, text_dim + vision_dim, "both")]
    if text_dim is None or vision_dim is None:
        raise SpecError("dual framework needs both text and vision dims")
    return [
        ("text", spec.backbone_text, text_dim, TEXT),
        ("vision", spec.backbone_vision, vision_dim, VISION),
    ]


def init_model(
    spec: FrameworkSpec,
    text_dim: int | None = None,
    vision_dim: int | None = None,
    seed: int = 0,
) -> ModelState:
    """Glorot-uniform weights, zero biases, unit-gamma batch norm;
    bit-deterministic per seed."""
    rng = np.random.default_rng(np.random.SeedSequence([0x90DE1, seed]))
    state = ModelState(spec=spec, text_dim=text_dim, vision_dim=vision_dim)
    plan = _branch_plan(spec, text_dim, vision_dim)
    for branch, backbone, in_dim, _source in plan:
        layer_specs = _branch_layer_specs(spec, backbone, in_dim)
        state.branch_specs[branch] = layer_specs
        for i, lspec in enumerate(layer_specs):
            for pname, p in init_layer_params(lspec, rng).items():
                state.params[f"{branch}.b{i}.{pname}"] = p
            bn = BatchNormState.create(lspec.out_dim)
            state.bn[f"{branch}.b{i}"] = bn
            state.params[f"{branch}.b{i}.bn.gamma"] = bn.gamma
            state.params[f"{branch}.b{i}.bn.beta"] = bn.beta
    if spec.kind == DUAL:
        d_in = 2 * spec.hidden
        w1 = glorot_uniform(rng, d_in, spec.head_hidden, (d_in, spec.head_hidden))
        state.params["head.fc1.W"] = ParamTensor(w1)
        state.params["head.fc1.b"] = ParamTensor(np.zeros((1, spec.head_hidden)))
        w2 = glorot_uniform(rng, spec.head_hidden, N_CLASSES, (spec.head_hidden, N_CLASSES))
        state.params["head.fc2.W"] = ParamTensor(w2)
        state.params["head.fc2.b"] = ParamTensor(np.zeros((1, N_CLASSES)))
    else:
        w = glorot_uniform(rng, spec.hidden, N_CLASSES, (spec.hidden, N_CLASSES))
        state.params["head.W"] = ParamTensor(w)
        state.params["head.b"] = ParamTensor(np.zeros((1, N_CLASSES)))
    return state


def _branch_input(source: str, x_t: np.ndarray | None, x_v: np.ndarray | None) -> np.ndarray:
    if source == TEXT:
        return x_t  # presence checked by caller
    if source == VISION:
        return x_v
    return np.concatenate([x_t, x_v], axis=1)


def _check_features(state: ModelState, graph: PageGraph, x_t, x_v) -> None:
    spec = state.spec
    for needed, x, dim, name in (
        (spec.uses_text, x_t, state.text_dim, TEXT),
        (spec.uses_vision, x_v, state.vision_dim, VISION),
    ):
        if not needed:
            continue
        if x is None:
            raise CoverageError(f"framework needs {name} features but none were given")
        if x.shape[0] != graph.n:
            raise CoverageError(
                f"{name} features cover {x.shape[0]} nodes, page graph has {graph.n}"
            )
        if x.shape[1] != dim:
            raise ShapeError(f"{name} features have dim {x.shape[1]}, model expects {dim}")


def forward_page_cached(
    state: ModelState,
    graph: PageGraph,
    x_t: np.ndarray | None,
    x_v: np.ndarray | None,
    mode: str = EVAL,
    rng: np.random.Generator | None = None,
    dropout_p: float = 0.0,
):
    """Page-level forward pass returning (logits, cache for backward)."""
    _check_features(state, graph, x_t, x_v)
    spec = state.spec
    ops = GraphOps(graph)
    plan = _branch_plan(spec, state.text_dim, state.vision_dim)
    branch_caches = []
    branch_outs = []
    for branch, _backbone, _in_dim, source in plan:
        h = _branch_input(source, x_t, x_v)
        block_caches = []
        for i, lspec in enumerate(state.branch_specs[branch]):
            h, c = block_forward(
                h, ops, lspec, state.block_params(branch, i),
                state.bn[f"{branch}.b{i}"], dropout_p, rng, mode,
            )
            block_caches.append(c)
        branch_caches.append((branch, block_caches))
        branch_outs.append(h)
    if spec.kind == DUAL:
        fused = np.concatenate(branch_outs, axis=1)
        y1, c1 = linear_forward(fused, state.params["head.fc1.W"].value, state.params["head.fc1.b"].value)
        y2, c2 = elu_forward(y1)
        logits, c3 = linear_forward(y2, state.params["head.fc2.W"].value, state.params["head.fc2.b"].value)
        head_cache = (c1, c2, c3, branch_outs[0].shape[1])
    else:
        logits, head_cache = linear_forward(
            branch_outs[0], state.params["head.W"].value, state.params["head.b"].value
        )
    return logits, (branch_caches, head_cache)


def forward_page(
    state: ModelState,
    graph: PageGraph,
    x_t: np.ndarray | None,
    x_v: np.ndarray | None,
    mode: str = EVAL,
    rng: np.random.Generator | None = None,
    dropout_p: float = 0.0,
) -> np.ndarray:
    """Logits (n x 4) for every node of the page."""
    return forward_page_cached(state, graph, x_t, x_v, mode, rng, dropout_p)[0]


def backward_page(state: ModelState, cache, dlogits: np.ndarray) -> None:
    """Accumulate parameter gradients for one page given dLoss/dLogits."""
    branch_caches, head_cache = cache
    spec = state.spec
    if spec.kind == DUAL:
        c1, c2, c3, split = head_cache
        d2, dw2, db2 = linear_backward(dlogits, c3)
        state.params["head.fc2.W"].grad += dw2
        state.params["head.fc2.b"].grad += db2
        d1 = elu_backward(d2, c2)
        dfused, dw1, db1 = linear_backward(d1, c1)
        state.params["head.fc1.W"].grad += dw1
        state.params["head.fc1.b"].grad += db1
        branch_grads = [dfused[:, :split], dfused[:, split:]]
    else:
        dbranch, dw, db = linear_backward(dlogits, head_cache)
        state.params["head.W"].grad += dw
        state.params["head.b"].grad += db
        branch_grads = [dbranch]
    for (branch, block_caches), dy in zip(branch_caches, branch_grads):
        for i in reversed(range(len(block_caches))):
            dy = block_backward(
                dy, block_caches[i], state.block_params(branch, i), state.bn[f"{branch}.b{i}"]
            )


# ---------------------------------------------------------------------------
# checkpointing
# ---------------------------------------------------------------------------

def model_records(state: ModelState) -> list[tuple[str, np.ndarray]]:
    """Checkpoint records in topology order: parameter values plus batch
    norm running statistics."""
    records: list[tuple[str, np.ndarray]] = [
        (name, p.value) for name, p in state.params.items()
    ]
    for bname, bn in state.bn.items():
        records.append((f"{bname}.bn.running_mean", bn.running_mean.reshape(1, -1)))
        records.append((f"{bname}.bn.running_var", bn.running_var.reshape(1, -1)))
    return records


def save_model(state: ModelState, path: str | Path) -> None:
    save_checkpoint(model_records(state), path)


def load_model(state: ModelState, path: str | Path) -> None:
    """Load parameter values and running stats into a compatibly shaped state."""
    loaded = dict(load_checkpoint(path))
    for name, arr in ((n, p) for n, p in state.params.items()):
        if name not in loaded:
            raise ShapeError(f"checkpoint missing parameter '{name}'")
        if loaded[name].shape != arr.value.shape:
            raise ShapeError(
                f"checkpoint parameter '{name}' has shape {loaded[name].shape}, "
                f"model expects {arr.value.shape}"
            )
        arr.value[...] = loaded[name]
    for bname, bn in state.bn.items():
        bn.running_mean[...] = loaded[f"{bname}.bn.running_mean"].ravel()
        bn.running_var[...] = loaded[f"{bname}.bn.running_var"].ravel()
