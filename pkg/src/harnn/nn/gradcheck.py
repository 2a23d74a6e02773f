"""Finite-difference verification of every analytic backward pass.

Each check builds a tiny random 64-bit instance, picks a fixed random upstream
gradient G, and compares the analytic gradient of the scalar objective
sum(forward * G) against central differences with h = 1e-5. Relative error is
|a - n| / max(|a| + |n|, 1e-8), reported per parameter tensor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import layers
from . import loss as loss_mod
from .init import init_conv, init_dense, init_lstm

H_STEP = 1e-5

# max relative error allowed per layer kind
TOLERANCES = {
    "conv": 1e-6,
    "pool": 1e-6,
    "dense": 1e-6,
    "lstm": 1e-4,
    "softmax_ce": 1e-6,
    "model": 1e-3,
}

KINDS = ("conv", "pool", "dense", "lstm", "softmax_ce", "model")


@dataclass
class GradReport:
    kind: str
    errors: dict[str, float]  # tensor name -> max relative error
    tolerance: float

    @property
    def max_error(self) -> float:
        return max(self.errors.values())

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def numeric_gradient(fn, arr: np.ndarray, h: float = H_STEP) -> np.ndarray:
    """Central differences of scalar fn() w.r.t. every element of arr (in place)."""
    grad = np.zeros_like(arr, dtype=np.float64)
    it = np.nditer(arr, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        saved = arr[idx]
        arr[idx] = saved + h
        fp = fn()
        arr[idx] = saved - h
        fm = fn()
        arr[idx] = saved
        grad[idx] = (fp - fm) / (2.0 * h)
        it.iternext()
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0


def _check_conv(seed: int) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    layer = init_conv(rng, in_ch=2, out_ch=2, dtype=np.float64)
    x = rng.standard_normal((6, 2))
    g = rng.standard_normal((4, 2))

    def objective():
        return float(np.sum(layers.conv1d_forward(x, layer) * g))

    gx, gw, gb = layers.conv1d_backward(g, x, layer)
    return {
        "x": relative_error(gx, numeric_gradient(objective, x)),
        "weights": relative_error(gw, numeric_gradient(objective, layer.weights)),
        "bias": relative_error(gb, numeric_gradient(objective, layer.bias)),
    }


def _check_pool(seed: int) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    # continuous draws, so exact ties (where the max is not differentiable)
    # have probability zero
    x = rng.standard_normal((6, 3))
    g = rng.standard_normal((5, 3))

    def objective():
        out, _ = layers.maxpool_forward(x)
        return float(np.sum(out * g))

    _, cache = layers.maxpool_forward(x)
    gx = layers.maxpool_backward(g, cache)
    return {"x": relative_error(gx, numeric_gradient(objective, x))}


def _check_dense(seed: int) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    layer = init_dense(rng, 4, 3, dtype=np.float64)
    x = rng.standard_normal(4)
    g = rng.standard_normal(3)

    def objective():
        return float(np.sum(layers.dense_forward(x, layer) * g))

    gx, gw, gb = layers.dense_backward(g, x, layer)
    return {
        "x": relative_error(gx, numeric_gradient(objective, x)),
        "weights": relative_error(gw, numeric_gradient(objective, layer.weights)),
        "bias": relative_error(gb, numeric_gradient(objective, layer.bias)),
    }


def _check_lstm(seed: int) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    layer = init_lstm(rng, in_dim=2, hidden=3, dtype=np.float64)
    x = rng.standard_normal((3, 2))
    g_seq = rng.standard_normal((3, 3))
    g_fin = rng.standard_normal(3)

    def objective():
        h_seq, h_final, _ = layers.lstm_forward(x, layer)
        return float(np.sum(h_seq * g_seq) + np.sum(h_final * g_fin))

    _, _, cache = layers.lstm_forward(x, layer)
    gx, grads = layers.lstm_backward(cache, layer, grad_h_seq=g_seq, grad_h_final=g_fin)
    errors = {"x": relative_error(gx, numeric_gradient(objective, x))}
    for name, analytic in grads.items():
        errors[name] = relative_error(analytic, numeric_gradient(objective, getattr(layer, name)))
    return errors


def _check_softmax_ce(seed: int) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    logits = rng.standard_normal(6)
    onehot = np.zeros(6)
    onehot[rng.integers(6)] = 1.0

    def objective():
        l, _, _ = loss_mod.softmax_cross_entropy(logits, onehot)
        return l

    _, grad, _ = loss_mod.softmax_cross_entropy(logits, onehot)
    return {"logits": relative_error(grad, numeric_gradient(objective, logits))}


def _check_model(seed: int) -> dict[str, float]:
    # imported here: models sits above the kernel layer
    from .. import models

    return models.model_gradient_errors(seed)


_CHECKS = {
    "conv": _check_conv,
    "pool": _check_pool,
    "dense": _check_dense,
    "lstm": _check_lstm,
    "softmax_ce": _check_softmax_ce,
    "model": _check_model,
}


def grad_check(kind: str, seed: int = 0) -> GradReport:
    """Verify one layer kind (or the whole shrunken model) against central differences."""
    if kind not in _CHECKS:
        raise ValueError(f"unknown gradcheck kind '{kind}'; expected one of {KINDS}")
    return GradReport(kind=kind, errors=_CHECKS[kind](seed), tolerance=TOLERANCES[kind])


def run_all(seed: int = 0) -> list[GradReport]:
    return [grad_check(kind, seed) for kind in KINDS]
