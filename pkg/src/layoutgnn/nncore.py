"""Dense numerical core: parameter tensors, layer forward/backward pairs,
the weighted cross-entropy loss, the SGD-with-momentum step, and the
binary parameter checkpoint.

All training math is f64 row-major; every backward pass is hand-written
and is checked against central finite differences in the test suite.
Mode flags ("train" / "eval") are always explicit arguments.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateBatch, EmptyMask, FormatError, ShapeError

TRAIN = "train"
EVAL = "eval"


def _check_mode(mode: str) -> None:
    if mode not in (TRAIN, EVAL):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")


class ParamTensor:
    """A trainable 2-D tensor with its gradient and momentum slots."""

    __slots__ = ("value", "grad", "momentum")

    def __init__(self, value: np.ndarray):
        v = np.array(value, dtype=np.float64, order="C")
        if v.ndim != 2:
            raise ShapeError(f"parameters are 2-D, got shape {v.shape}")
        self.value = v
        self.grad = np.zeros_like(v)
        self.momentum = np.zeros_like(v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape  # type: ignore[return-value]

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape: tuple[int, int]) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------

def linear_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """y = x @ w + b with b broadcast over rows."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeError(f"linear: x {x.shape} incompatible with w {w.shape}")
    if b.shape != (1, w.shape[1]):
        raise ShapeError(f"linear: bias shape {b.shape}, expected (1, {w.shape[1]})")
    return x @ w + b, (x, w)


def linear_backward(dy: np.ndarray, cache):
    x, w = cache
    dx = dy @ w.T
    dw = x.T @ dy
    db = dy.sum(axis=0, keepdims=True)
    return dx, dw, db


def elu_forward(x: np.ndarray):
    pos = x > 0
    y = np.where(pos, x, np.expm1(x))
    return y, (pos, y)


def elu_backward(dy: np.ndarray, cache):
    pos, y = cache
    return dy * np.where(pos, 1.0, y + 1.0)


@dataclass
class BatchNormState:
    """Per-feature affine normalization with running statistics."""

    gamma: ParamTensor
    beta: ParamTensor
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float = 1e-5
    momentum: float = 0.1

    @classmethod
    def create(cls, dim: int) -> "BatchNormState":
        return cls(
            gamma=ParamTensor(np.ones((1, dim))),
            beta=ParamTensor(np.zeros((1, dim))),
            running_mean=np.zeros(dim),
            running_var=np.ones(dim),
        )

    @property
    def dim(self) -> int:
        return self.gamma.shape[1]


def batchnorm_forward(x: np.ndarray, state: BatchNormState, mode: str):
    """Standardize each feature; train mode uses batch statistics and
    updates running stats as m <- (1 - rho) m + rho batch_mean, rho = 0.1.
    """
    _check_mode(mode)
    if x.ndim != 2 or x.shape[1] != state.dim:
        raise ShapeError(f"batchnorm: input {x.shape}, state dim {state.dim}")
    if mode == TRAIN:
        if x.shape[0] < 2:
            raise DegenerateBatch(f"batchnorm needs >= 2 rows in train mode, got {x.shape[0]}")
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        rho = state.momentum
        state.running_mean *= 1.0 - rho
        state.running_mean += rho * mean
        state.running_var *= 1.0 - rho
        state.running_var += rho * var
    else:
        mean = state.running_mean
        var = state.running_var
    inv_std = 1.0 / np.sqrt(var + state.eps)
    xhat = (x - mean) * inv_std
    y = xhat * state.gamma.value + state.beta.value
    return y, (xhat, inv_std, state.gamma.value.copy(), mode)


def batchnorm_backward(dy: np.ndarray, cache):
    """Returns (dx, dgamma, dbeta); full-batch gradient in train mode."""
    xhat, inv_std, gamma, mode = cache
    dgamma = (dy * xhat).sum(axis=0, keepdims=True)
    dbeta = dy.sum(axis=0, keepdims=True)
    dxhat = dy * gamma
    if mode == EVAL:
        return dxhat * inv_std, dgamma, dbeta
    n = dy.shape[0]
    dx = (inv_std / n) * (
        n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
    )
    return dx, dgamma, dbeta


def dropout_forward(x: np.ndarray, p: float, rng: np.random.Generator | None, mode: str):
    """Inverted dropout: survivors scaled by 1/(1-p); identity in eval mode."""
    _check_mode(mode)
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {p}")
    if mode == EVAL or p == 0.0:
        return x, None
    if rng is None:
        raise ValueError("dropout in train mode needs an explicit rng")
    keep = rng.random(x.shape) >= p
    scale = 1.0 / (1.0 - p)
    return x * keep * scale, (keep, scale)


def dropout_backward(dy: np.ndarray, cache):
    if cache is None:
        return dy
    keep, scale = cache
    return dy * keep * scale


# ---------------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------------

def weighted_ce_parts(
    logits: np.ndarray,
    labels: np.ndarray,
    class_weights: np.ndarray,
    mask: np.ndarray,
):
    """Unnormalized pieces of the weighted cross-entropy over masked rows.

    Returns (loss_sum, weight_sum, dlogits_raw) where dlogits_raw holds
    w_i * (softmax_i - onehot_i) on masked rows and 0 elsewhere; divide
    both loss_sum and dlogits_raw by the applied-weight total to get the
    weighted-mean loss and its gradient.
    """
    mask = np.asarray(mask, dtype=bool)
    if logits.ndim != 2 or mask.shape != (logits.shape[0],):
        raise ShapeError(f"loss: logits {logits.shape} vs mask {mask.shape}")
    weights = np.asarray(class_weights, dtype=np.float64)
    if weights.shape != (logits.shape[1],):
        raise ShapeError(f"loss: {weights.shape[0]} weights for {logits.shape[1]} classes")
    if np.any(weights <= 0):
        raise ValueError("class weights must be positive")
    idx = np.flatnonzero(mask)
    dlogits = np.zeros_like(logits)
    if idx.size == 0:
        return 0.0, 0.0, dlogits
    sub = logits[idx]
    y = np.asarray(labels)[idx]
    z = sub - sub.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsumexp
    w_rows = weights[y]
    loss_sum = float(-(w_rows * logp[np.arange(idx.size), y]).sum())
    grad = np.exp(logp)
    grad[np.arange(idx.size), y] -= 1.0
    dlogits[idx] = grad * w_rows[:, None]
    return loss_sum, float(w_rows.sum()), dlogits


def weighted_ce_loss(
    logits: np.ndarray,
    labels: np.ndarray,
    class_weights: np.ndarray,
    mask: np.ndarray,
):
    """Weighted-mean cross-entropy over masked rows and its logits gradient."""
    loss_sum, weight_sum, dlogits_raw = weighted_ce_parts(logits, labels, class_weights, mask)
    if weight_sum == 0.0:
        raise EmptyMask("loss mask selects no rows")
    return loss_sum / weight_sum, dlogits_raw / weight_sum


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

def sgd_step(params: Iterable[ParamTensor], lr: float = 1e-3, momentum: float = 0.9) -> None:
    """v <- momentum * v + g; theta <- theta - lr * v; grads zeroed."""
    for p in params:
        p.momentum *= momentum
        p.momentum += p.grad
        p.value -= lr * p.momentum
        p.zero_grad()


# ---------------------------------------------------------------------------
# checkpoint
# ---------------------------------------------------------------------------

CKPT_MAGIC = b"CKPT"
_CKPT_HEADER = struct.Struct("<4sI")
_REC_HEADER = struct.Struct("<HII")


def save_checkpoint(records: Sequence[tuple[str, np.ndarray]], path: str | Path) -> None:
    """Write ordered (name, rows, cols, f64 payload) records."""
    parts = [_CKPT_HEADER.pack(CKPT_MAGIC, len(records))]
    for name, arr in records:
        a = np.asarray(arr, dtype="<f8")
        if a.ndim != 2:
            raise ShapeError(f"checkpoint record '{name}' must be 2-D, got {a.shape}")
        raw = name.encode("utf-8")
        parts.append(_REC_HEADER.pack(len(raw), a.shape[0], a.shape[1]))
        parts.append(raw)
        parts.append(np.ascontiguousarray(a).tobytes())
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(b"".join(parts))
    os.replace(tmp, path)


def load_checkpoint(path: str | Path) -> list[tuple[str, np.ndarray]]:
    blob = Path(path).read_bytes()
    if len(blob) < _CKPT_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, count = _CKPT_HEADER.unpack_from(blob, 0)
    if magic != CKPT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    offset = _CKPT_HEADER.size
    records = []
    for _ in range(count):
        if offset + _REC_HEADER.size > len(blob):
            raise FormatError(f"{path}: truncated record header")
        name_len, rows, cols = _REC_HEADER.unpack_from(blob, offset)
        offset += _REC_HEADER.size
        payload = rows * cols * 8
        if offset + name_len + payload > len(blob):
            raise FormatError(f"{path}: truncated record payload")
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        arr = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols).copy()
        offset += payload
        records.append((name, arr))
    if offset != len(blob):
        raise FormatError(f"{path}: {len(blob) - offset} trailing bytes")
    return records
