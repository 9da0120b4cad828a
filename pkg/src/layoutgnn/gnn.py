"""The four message-passing layer types with hand-written backward passes,
and the standard block composition layer -> batchnorm -> ELU -> dropout.

Row-vector convention throughout: features are (n x d) and weights map
columns, y = x @ w. Operators come from :mod:`layoutgnn.graphbuild`:

* GCN consumes the self-looped symmetric operator (``gcn_sym``),
  h' = S h w with S = D^-1/2 (A + I) D^-1/2.
* GraphSAGE consumes neighbor lists and applies the mean aggregator,
  h'_v = h_v w_self + mean_{u in N(v)} h_u w_neigh (zero vector for an
  empty neighborhood).
* GAT consumes neighbor lists; per head, e_vu = leaky(a . [w h_v || w h_u])
  is softmaxed over the closed neighborhood N(v) + {v} and heads are
  concatenated.
* TAGCN consumes the plain symmetric operator (``plain_sym``),
  h' = sum_k S^k h w_k for k = 0..K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, SpecError
from .graphbuild import (
    GCN_SYM,
    NEIGHBOR_LISTS,
    PLAIN_SYM,
    NormalizedAdjacency,
    PageGraph,
    normalize,
)
from .nncore import (
    BatchNormState,
    ParamTensor,
    batchnorm_backward,
    batchnorm_forward,
    dropout_backward,
    dropout_forward,
    elu_backward,
    elu_forward,
    glorot_uniform,
)

GCN = "gcn"
GAT = "gat"
SAGE = "sage"
TAGCN = "tagcn"
BACKBONES = (GCN, GAT, SAGE, TAGCN)


@dataclass(frozen=True)
class GnnLayerSpec:
    kind: str
    in_dim: int
    out_dim: int
    heads: int = 4           # GAT only
    hops: int = 3            # TAGCN only
    leaky_slope: float = 0.2  # GAT only

    def __post_init__(self) -> None:
        if self.kind not in BACKBONES:
            raise SpecError(f"unknown layer kind {self.kind!r}")
        if self.in_dim < 1 or self.out_dim < 1:
            raise SpecError("layer dims must be >= 1")
        if self.kind == GAT:
            if self.heads < 1 or self.out_dim % self.heads != 0:
                raise SpecError(
                    f"GAT out_dim {self.out_dim} must be divisible by heads {self.heads}"
                )
        if self.kind == TAGCN and self.hops < 1:
            raise SpecError("TAGCN needs hops >= 1")


class GraphOps:
    """Per-page operator bundle, built lazily so each variant is computed
    at most once per forward pass."""

    def __init__(self, graph: PageGraph):
        self.graph = graph
        self._built: dict[str, NormalizedAdjacency] = {}

    def get(self, variant: str) -> NormalizedAdjacency:
        op = self._built.get(variant)
        if op is None:
            op = normalize(self.graph, variant)
            self._built[variant] = op
        return op


def _require_variant(op: NormalizedAdjacency, variant: str) -> None:
    if op.variant != variant:
        raise ShapeError(f"operator is {op.variant!r}, layer needs {variant!r}")


# ---------------------------------------------------------------------------
# GCN
# ---------------------------------------------------------------------------

def gcn_forward(h: np.ndarray, op: NormalizedAdjacency, w: np.ndarray):
    _require_variant(op, GCN_SYM)
    if h.shape[0] != op.n or h.shape[1] != w.shape[0]:
        raise ShapeError(f"gcn: h {h.shape}, op n={op.n}, w {w.shape}")
    s = op.matrix
    sh = s @ h
    return sh @ w, (s, sh, w)


def gcn_backward(dy: np.ndarray, cache):
    s, sh, w = cache
    dw = sh.T @ dy
    dh = s.T @ (dy @ w.T)
    return dh, dw


# ---------------------------------------------------------------------------
# GraphSAGE (mean aggregator)
# ---------------------------------------------------------------------------

def _mean_matrix(neighbors: tuple[np.ndarray, ...]) -> np.ndarray:
    n = len(neighbors)
    m = np.zeros((n, n))
    for v, nb in enumerate(neighbors):
        if nb.size:
            m[v, nb] = 1.0 / nb.size
    return m


def sage_forward(
    h: np.ndarray,
    neighbors: NormalizedAdjacency,
    w_self: np.ndarray,
    w_neigh: np.ndarray,
):
    _require_variant(neighbors, NEIGHBOR_LISTS)
    if h.shape[0] != neighbors.n or h.shape[1] != w_self.shape[0] or w_self.shape != w_neigh.shape:
        raise ShapeError(f"sage: h {h.shape}, w_self {w_self.shape}, w_neigh {w_neigh.shape}")
    m = _mean_matrix(neighbors.neighbors)
    mh = m @ h
    y = h @ w_self + mh @ w_neigh
    return y, (h, m, mh, w_self, w_neigh)


def sage_backward(dy: np.ndarray, cache):
    h, m, mh, w_self, w_neigh = cache
    dw_self = h.T @ dy
    dw_neigh = mh.T @ dy
    dh = dy @ w_self.T + m.T @ (dy @ w_neigh.T)
    return dh, dw_self, dw_neigh


# ---------------------------------------------------------------------------
# GAT (multi-head, concatenated)
# ---------------------------------------------------------------------------

def _closed_mask(neighbors: tuple[np.ndarray, ...]) -> np.ndarray:
    n = len(neighbors)
    mask = np.eye(n, dtype=bool)
    for v, nb in enumerate(neighbors):
        mask[v, nb] = True
    return mask


def gat_forward(
    h: np.ndarray,
    neighbors: NormalizedAdjacency,
    w_heads: list[np.ndarray],
    a_heads: list[np.ndarray],
    leaky_slope: float = 0.2,
):
    """Per head: scores over the closed neighborhood, softmax rows,
    attention-weighted sum of projected neighbors; heads concatenated."""
    _require_variant(neighbors, NEIGHBOR_LISTS)
    if len(w_heads) != len(a_heads) or not w_heads:
        raise ShapeError("gat: need one (w, a) pair per head")
    n = neighbors.n
    if h.shape[0] != n:
        raise ShapeError(f"gat: h has {h.shape[0]} rows, graph has {n} nodes")
    mask = _closed_mask(neighbors.neighbors)
    outs = []
    caches = []
    for w, a in zip(w_heads, a_heads):
        dh_head = w.shape[1]
        if w.shape[0] != h.shape[1] or a.shape != (2 * dh_head, 1):
            raise ShapeError(f"gat: w {w.shape} and a {a.shape} disagree with h {h.shape}")
        z = h @ w
        score_self = z @ a[:dh_head, 0]
        score_nbr = z @ a[dh_head:, 0]
        pre = score_self[:, None] + score_nbr[None, :]
        e = np.where(pre > 0, pre, leaky_slope * pre)
        e = np.where(mask, e, -np.inf)
        e_max = e.max(axis=1, keepdims=True)
        ex = np.exp(e - e_max)
        ex[~mask] = 0.0
        alpha = ex / ex.sum(axis=1, keepdims=True)
        outs.append(alpha @ z)
        caches.append((z, alpha, pre, w, a))
    y = np.concatenate(outs, axis=1)
    return y, (h, mask, leaky_slope, caches)


def gat_backward(dy: np.ndarray, cache):
    h, mask, slope, head_caches = cache
    dh = np.zeros_like(h)
    dw_heads = []
    da_heads = []
    col = 0
    for z, alpha, pre, w, a in head_caches:
        dh_head = z.shape[1]
        dy_h = dy[:, col : col + dh_head]
        col += dh_head
        dalpha = dy_h @ z.T
        dz = alpha.T @ dy_h
        # softmax rows: de = alpha * (dalpha - sum_w alpha * dalpha)
        row_dot = (alpha * dalpha).sum(axis=1, keepdims=True)
        de = alpha * (dalpha - row_dot)
        dpre = np.where(pre > 0, de, slope * de)
        dpre[~mask] = 0.0
        dscore_self = dpre.sum(axis=1)
        dscore_nbr = dpre.sum(axis=0)
        a_self = a[:dh_head, 0]
        a_nbr = a[dh_head:, 0]
        dz += np.outer(dscore_self, a_self) + np.outer(dscore_nbr, a_nbr)
        da = np.concatenate([z.T @ dscore_self, z.T @ dscore_nbr])[:, None]
        dw_heads.append(h.T @ dz)
        da_heads.append(da)
        dh += dz @ w.T
    return dh, dw_heads, da_heads


# ---------------------------------------------------------------------------
# TAGCN
# ---------------------------------------------------------------------------

def tagcn_forward(h: np.ndarray, op: NormalizedAdjacency, w_list: list[np.ndarray]):
    """h' = sum_k S^k h w_k, k = 0..K, with S^0 = I."""
    _require_variant(op, PLAIN_SYM)
    if not w_list:
        raise ShapeError("tagcn: need at least w_0")
    if h.shape[0] != op.n or any(w.shape != w_list[0].shape for w in w_list):
        raise ShapeError(f"tagcn: h {h.shape} with {len(w_list)} weight hops")
    if h.shape[1] != w_list[0].shape[0]:
        raise ShapeError(f"tagcn: h {h.shape} incompatible with w {w_list[0].shape}")
    s = op.matrix
    powers = [h]
    for _ in range(len(w_list) - 1):
        powers.append(s @ powers[-1])
    y = powers[0] @ w_list[0]
    for p, w in zip(powers[1:], w_list[1:]):
        y += p @ w
    return y, (s, powers, w_list)


def tagcn_backward(dy: np.ndarray, cache):
    s, powers, w_list = cache
    dw_list = [p.T @ dy for p in powers]
    # dh = sum_k (S^T)^k dy w_k^T, evaluated by Horner's rule
    dh = dy @ w_list[-1].T
    for w in reversed(w_list[:-1]):
        dh = s.T @ dh + dy @ w.T
    return dh, dw_list


# ---------------------------------------------------------------------------
# parameter plumbing and the block
# ---------------------------------------------------------------------------

def layer_param_shapes(spec: GnnLayerSpec) -> dict[str, tuple[int, int]]:
    """Parameter names and shapes, in checkpoint order."""
    if spec.kind == GCN:
        return {"W": (spec.in_dim, spec.out_dim)}
    if spec.kind == SAGE:
        return {
            "W_self": (spec.in_dim, spec.out_dim),
            "W_neigh": (spec.in_dim, spec.out_dim),
        }
    if spec.kind == GAT:
        dh = spec.out_dim // spec.heads
        shapes: dict[str, tuple[int, int]] = {}
        for i in range(spec.heads):
            shapes[f"W{i}"] = (spec.in_dim, dh)
            shapes[f"a{i}"] = (2 * dh, 1)
        return shapes
    return {f"W{k}": (spec.in_dim, spec.out_dim) for k in range(spec.hops + 1)}


def init_layer_params(spec: GnnLayerSpec, rng: np.random.Generator) -> dict[str, ParamTensor]:
    params = {}
    for name, (rows, cols) in layer_param_shapes(spec).items():
        params[name] = ParamTensor(glorot_uniform(rng, rows, cols, (rows, cols)))
    return params


def layer_forward(h: np.ndarray, ops: GraphOps, spec: GnnLayerSpec, params: dict[str, ParamTensor]):
    if spec.kind == GCN:
        return gcn_forward(h, ops.get(GCN_SYM), params["W"].value)
    if spec.kind == SAGE:
        return sage_forward(h, ops.get(NEIGHBOR_LISTS), params["W_self"].value, params["W_neigh"].value)
    if spec.kind == GAT:
        w_heads = [params[f"W{i}"].value for i in range(spec.heads)]
        a_heads = [params[f"a{i}"].value for i in range(spec.heads)]
        return gat_forward(h, ops.get(NEIGHBOR_LISTS), w_heads, a_heads, spec.leaky_slope)
    w_list = [params[f"W{k}"].value for k in range(spec.hops + 1)]
    return tagcn_forward(h, ops.get(PLAIN_SYM), w_list)


def layer_backward(dy: np.ndarray, cache, spec: GnnLayerSpec, params: dict[str, ParamTensor]) -> np.ndarray:
    """Accumulates parameter gradients in place; returns dh."""
    if spec.kind == GCN:
        dh, dw = gcn_backward(dy, cache)
        params["W"].grad += dw
        return dh
    if spec.kind == SAGE:
        dh, dw_self, dw_neigh = sage_backward(dy, cache)
        params["W_self"].grad += dw_self
        params["W_neigh"].grad += dw_neigh
        return dh
    if spec.kind == GAT:
        dh, dw_heads, da_heads = gat_backward(dy, cache)
        for i, (dw, da) in enumerate(zip(dw_heads, da_heads)):
            params[f"W{i}"].grad += dw
            params[f"a{i}"].grad += da
        return dh
    dh, dw_list = tagcn_backward(dy, cache)
    for k, dw in enumerate(dw_list):
        params[f"W{k}"].grad += dw
    return dh


def block_forward(
    h: np.ndarray,
    ops: GraphOps,
    spec: GnnLayerSpec,
    params: dict[str, ParamTensor],
    bn_state: BatchNormState,
    dropout_p: float,
    rng: np.random.Generator | None,
    mode: str,
):
    """layer -> batchnorm -> ELU -> dropout."""
    y1, layer_cache = layer_forward(h, ops, spec, params)
    y2, bn_cache = batchnorm_forward(y1, bn_state, mode)
    y3, elu_cache = elu_forward(y2)
    y4, drop_cache = dropout_forward(y3, dropout_p, rng, mode)
    return y4, (layer_cache, bn_cache, elu_cache, drop_cache, spec)


def block_backward(
    dy: np.ndarray,
    cache,
    params: dict[str, ParamTensor],
    bn_state: BatchNormState,
) -> np.ndarray:
    layer_cache, bn_cache, elu_cache, drop_cache, spec = cache
    d3 = dropout_backward(dy, drop_cache)
    d2 = elu_backward(d3, elu_cache)
    d1, dgamma, dbeta = batchnorm_backward(d2, bn_cache)
    bn_state.gamma.grad += dgamma
    bn_state.beta.grad += dbeta
    return layer_backward(d1, layer_cache, spec, params)


def gnn_block(
    h: np.ndarray,
    graph: PageGraph,
    spec: GnnLayerSpec,
    params: dict[str, ParamTensor],
    bn_state: BatchNormState,
    dropout_p: float,
    rng: np.random.Generator | None,
    mode: str,
):
    """Convenience entry building operators from the raw graph."""
    return block_forward(h, GraphOps(graph), spec, params, bn_state, dropout_p, rng, mode)
