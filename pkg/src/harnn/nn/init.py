"""Parameter initialization: Glorot-uniform weights, zero biases, forget bias 1."""

from __future__ import annotations

import math

import numpy as np

from .layers import KERNEL, Conv1dLayer, DenseLayer, LstmLayer


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int,
                   dtype=np.float32) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def init_conv(rng: np.random.Generator, in_ch: int, out_ch: int, dtype=np.float32) -> Conv1dLayer:
    w = glorot_uniform(rng, (KERNEL, in_ch, out_ch), KERNEL * in_ch, KERNEL * out_ch, dtype)
    return Conv1dLayer(weights=w, bias=np.zeros(out_ch, dtype=dtype))


def init_dense(rng: np.random.Generator, d_in: int, d_out: int, dtype=np.float32) -> DenseLayer:
    w = glorot_uniform(rng, (d_in, d_out), d_in, d_out, dtype)
    return DenseLayer(weights=w, bias=np.zeros(d_out, dtype=dtype))


def init_lstm(rng: np.random.Generator, in_dim: int, hidden: int, dtype=np.float32) -> LstmLayer:
    """Draw order is fixed (W_i..W_g then U_i..U_g) so a seed pins every value."""
    ws = {f"W_{g}": glorot_uniform(rng, (in_dim, hidden), in_dim, hidden, dtype)
          for g in LstmLayer.GATES}
    us = {f"U_{g}": glorot_uniform(rng, (hidden, hidden), hidden, hidden, dtype)
          for g in LstmLayer.GATES}
    bs = {f"b_{g}": np.zeros(hidden, dtype=dtype) for g in LstmLayer.GATES}
    bs["b_f"] = np.ones(hidden, dtype=dtype)  # open forget gates at step 0
    return LstmLayer(**ws, **us, **bs)
