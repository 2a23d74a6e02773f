"""Softmax and categorical cross-entropy with its analytic gradient."""

from __future__ import annotations

import numpy as np

LOG_CLAMP = 1e-12


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-shifted softmax along the last axis."""
    z = np.asarray(logits)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, onehot: np.ndarray):
    """Loss, gradient w.r.t. logits, and probabilities.

    loss = -log p[true] (log clamped at 1e-12); grad = probs - onehot.
    Accepts a single (K,) pair or batches (B, K); loss is a scalar or (B,).
    """
    z = np.asarray(logits)
    y = np.asarray(onehot, dtype=z.dtype)
    if z.shape != y.shape:
        raise ValueError(f"logits shape {z.shape} != onehot shape {y.shape}")
    single = z.ndim == 1
    z2 = z[None, :] if single else z
    y2 = y[None, :] if single else y
    probs = softmax(z2)
    p_true = (probs * y2).sum(axis=1)
    loss = -np.log(np.maximum(p_true, LOG_CLAMP))
    grad = probs - y2
    if single:
        return float(loss[0]), grad[0], probs[0]
    return loss, grad, probs
