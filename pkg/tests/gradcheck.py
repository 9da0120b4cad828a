"""Central finite-difference gradient oracle used across the test suite.

Kept independent of the package's backward passes: it only calls forward
code through a scalar-valued closure and perturbs raw arrays in place.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def fd_gradient(f: Callable[[], float], arr: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """d f / d arr by central differences, perturbing arr in place."""
    grad = np.zeros_like(arr, dtype=np.float64)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def max_rel_err(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Max elementwise |a - n| / max(floor, |a|, |n|)."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(floor, np.maximum(np.abs(a), np.abs(n)))
    return float((np.abs(a - n) / denom).max())


def assert_grad_close(analytic: np.ndarray, f: Callable[[], float], arr: np.ndarray,
                      tol: float = 1e-4, h: float = 1e-5) -> None:
    numeric = fd_gradient(f, arr, h=h)
    err = max_rel_err(analytic, numeric)
    assert err < tol, f"gradient mismatch: max rel err {err:.3e} >= {tol}"
