"""Layer primitives: 1-D convolution, max pooling, LSTM, dense, dropout.

All forwards/backwards are pure functions of (input, parameters, cache);
parameters live in small dataclass containers and caches are returned
explicitly, so layers can be shared read-only across threads.

Inputs may be a single window (L, C) or a batch (B, L, C) / (B, D); outputs
keep the input's rank. Gradients are summed over the batch — averaging is the
trainer's job (it scales the upstream loss gradient).

Convolutions use the cross-correlation convention (no kernel flip) with valid
padding; pooling is size 2, stride 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import NumericError

KERNEL = 3
POOL = 2


def _as_batch(x: np.ndarray, rank: int):
    """Promote `x` to rank `rank`+1 by prepending a batch axis if needed."""
    x = np.asarray(x)
    if x.ndim == rank:
        return x[None, ...], True
    if x.ndim == rank + 1:
        return x, False
    raise ValueError(f"expected rank {rank} or {rank + 1} input, got shape {x.shape}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # branch on sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class Conv1dLayer:
    """Valid 1-D convolution, kernel 3, stride 1."""

    weights: np.ndarray  # (3, in_ch, out_ch)
    bias: np.ndarray  # (out_ch,)

    def __post_init__(self):
        if self.weights.ndim != 3 or self.weights.shape[0] != KERNEL:
            raise ValueError(f"conv weights must be (3, in_ch, out_ch), got {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[2],):
            raise ValueError("conv bias shape does not match out_ch")

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weights.shape[2]


def conv1d_forward(x: np.ndarray, layer: Conv1dLayer) -> np.ndarray:
    """out[t, o] = bias[o] + sum_{k,c} x[t+k, c] * W[k, c, o]; output length L-2."""
    x3, squeeze = _as_batch(x, 2)
    if x3.shape[1] < KERNEL:
        raise ValueError(f"conv input length {x3.shape[1]} < kernel {KERNEL}")
    if x3.shape[2] != layer.in_channels:
        raise ValueError(f"conv expected {layer.in_channels} channels, got {x3.shape[2]}")
    win = sliding_window_view(x3, KERNEL, axis=1)  # (B, L-2, C, 3)
    out = np.tensordot(win, layer.weights, axes=((3, 2), (0, 1))) + layer.bias
    return out[0] if squeeze else out


def conv1d_backward(grad_out: np.ndarray, x: np.ndarray, layer: Conv1dLayer):
    """Exact gradients of conv1d_forward; returns (grad_x, grad_w, grad_b)."""
    x3, squeeze = _as_batch(x, 2)
    g3, _ = _as_batch(grad_out, 2)
    t_out = x3.shape[1] - KERNEL + 1
    if g3.shape != (x3.shape[0], t_out, layer.out_channels):
        raise ValueError(f"grad_out shape {grad_out.shape} inconsistent with input {x.shape}")
    grad_b = g3.sum(axis=(0, 1))
    win = sliding_window_view(x3, KERNEL, axis=1)  # (B, T, C, 3)
    grad_w = np.tensordot(win, g3, axes=((0, 1), (0, 1))).transpose(1, 0, 2)  # (3, C, O)
    grad_x = np.zeros_like(x3)
    for k in range(KERNEL):
        grad_x[:, k : k + t_out, :] += g3 @ layer.weights[k].T
    return (grad_x[0] if squeeze else grad_x), grad_w, grad_b


def maxpool_forward(x: np.ndarray):
    """Pairwise max over (t, t+1); ties take the earlier index. Returns (out, cache)."""
    x3, squeeze = _as_batch(x, 2)
    if x3.shape[1] < POOL:
        raise ValueError(f"pool input length {x3.shape[1]} < {POOL}")
    first, second = x3[:, :-1, :], x3[:, 1:, :]
    take_second = second > first  # strict: equal values keep the earlier element
    out = np.where(take_second, second, first)
    cache = (take_second, x3.shape, squeeze)
    return (out[0] if squeeze else out), cache


def maxpool_backward(grad_out: np.ndarray, cache) -> np.ndarray:
    """Route each upstream element to its argmax position; overlaps accumulate."""
    take_second, x_shape, squeeze = cache
    g3, _ = _as_batch(grad_out, 2)
    if g3.shape != take_second.shape:
        raise ValueError(f"grad_out shape {grad_out.shape} does not match pool cache")
    grad_x = np.zeros(x_shape, dtype=g3.dtype)
    grad_x[:, :-1, :] += np.where(take_second, 0.0, g3)
    grad_x[:, 1:, :] += np.where(take_second, g3, 0.0)
    return grad_x[0] if squeeze else grad_x


@dataclass
class DenseLayer:
    """Affine map x @ W + b."""

    weights: np.ndarray  # (in_dim, out_dim)
    bias: np.ndarray  # (out_dim,)


def dense_forward(x: np.ndarray, layer: DenseLayer) -> np.ndarray:
    x2, squeeze = _as_batch(x, 1)
    if x2.shape[1] != layer.weights.shape[0]:
        raise ValueError(f"dense expected {layer.weights.shape[0]} inputs, got {x2.shape[1]}")
    out = x2 @ layer.weights + layer.bias
    return out[0] if squeeze else out


def dense_backward(grad_out: np.ndarray, x: np.ndarray, layer: DenseLayer):
    """Returns (grad_x, grad_w, grad_b); grad_b equals upstream summed over batch."""
    x2, squeeze = _as_batch(x, 1)
    g2, _ = _as_batch(grad_out, 1)
    if g2.shape != (x2.shape[0], layer.weights.shape[1]):
        raise ValueError(f"grad_out shape {grad_out.shape} inconsistent with dense layer")
    grad_x = g2 @ layer.weights.T
    grad_w = x2.T @ g2
    grad_b = g2.sum(axis=0)
    return (grad_x[0] if squeeze else grad_x), grad_w, grad_b


@dataclass
class DropoutLayer:
    """Inverted dropout: train keeps with prob 1-rate and rescales; eval is identity."""

    rate: float = 0.3
    rng: np.random.Generator = field(default_factory=np.random.default_rng)

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {self.rate}")


def dropout_apply(x: np.ndarray, layer: DropoutLayer, train: bool):
    """Returns (y, mask); mask is None in eval mode (y is x, untouched)."""
    if not train:
        return x, None
    keep = 1.0 - layer.rate
    mask = (layer.rng.random(x.shape) < keep).astype(x.dtype) / keep
    return x * mask, mask


def dropout_backward(grad_out: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    if mask is None:  # eval-mode pass-through
        return grad_out
    return grad_out * mask


@dataclass
class LstmLayer:
    """Single LSTM layer with input, forget, output gates and a tanh candidate.

    Per-gate input weights W_* are (in_dim, hidden), recurrent weights U_* are
    (hidden, hidden), biases b_* are (hidden,). No peephole connections.
    """

    W_i: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    W_g: np.ndarray
    U_i: np.ndarray
    U_f: np.ndarray
    U_o: np.ndarray
    U_g: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_g: np.ndarray

    GATES = ("i", "f", "o", "g")

    @property
    def in_dim(self) -> int:
        return self.W_i.shape[0]

    @property
    def hidden(self) -> int:
        return self.W_i.shape[1]

    def packed(self):
        """Concatenated (W, U, b) in gate order i, f, o, g for the matmul path."""
        w = np.concatenate([self.W_i, self.W_f, self.W_o, self.W_g], axis=1)
        u = np.concatenate([self.U_i, self.U_f, self.U_o, self.U_g], axis=1)
        b = np.concatenate([self.b_i, self.b_f, self.b_o, self.b_g])
        return w, u, b


def lstm_forward(x: np.ndarray, layer: LstmLayer, h0: np.ndarray | None = None,
                 c0: np.ndarray | None = None):
    """Run the gate recurrence over all timesteps.

    i, f, o = sigmoid(x W + h U + b); g = tanh(x W_g + h U_g + b_g);
    c <- f*c + i*g; h <- o*tanh(c).

    Returns (h_seq, h_final, cache) with h_seq shaped (T, H) or (B, T, H).
    """
    x3, squeeze = _as_batch(x, 2)
    nb, t_len, d = x3.shape
    h = layer.hidden
    if t_len < 1:
        raise ValueError("lstm needs at least one timestep")
    if d != layer.in_dim:
        raise ValueError(f"lstm expected {layer.in_dim} input features, got {d}")
    w, u, b = layer.packed()

    def _state(s, name):
        if s is None:
            return np.zeros((nb, h), dtype=x3.dtype)
        s = np.asarray(s, dtype=x3.dtype)
        s2 = s[None, :] if s.ndim == 1 else s
        if s2.shape != (nb, h):
            raise ValueError(f"{name} shape {s.shape} does not match (batch, hidden)")
        return s2.copy()

    h_prev = _state(h0, "h0")
    c_prev = _state(c0, "c0")

    xz = x3.reshape(nb * t_len, d) @ w
    xz = xz.reshape(nb, t_len, 4 * h)

    gates = np.empty((t_len, nb, 4 * h), dtype=x3.dtype)
    c_seq = np.empty((t_len, nb, h), dtype=x3.dtype)
    h_seq = np.empty((t_len, nb, h), dtype=x3.dtype)
    for t in range(t_len):
        z = xz[:, t, :] + h_prev @ u + b
        gi = _sigmoid(z[:, :h])
        gf = _sigmoid(z[:, h : 2 * h])
        go = _sigmoid(z[:, 2 * h : 3 * h])
        gg = np.tanh(z[:, 3 * h :])
        c_t = gf * c_prev + gi * gg
        h_t = go * np.tanh(c_t)
        if not np.all(np.isfinite(h_t)):
            raise NumericError(f"non-finite LSTM activation at timestep {t}")
        gates[t, :, :h] = gi
        gates[t, :, h : 2 * h] = gf
        gates[t, :, 2 * h : 3 * h] = go
        gates[t, :, 3 * h :] = gg
        c_seq[t] = c_t
        h_seq[t] = h_t
        h_prev, c_prev = h_t, c_t

    cache = {
        "x": x3,
        "gates": gates,
        "c_seq": c_seq,
        "h_seq": h_seq,
        "h0": _state(h0, "h0"),
        "c0": _state(c0, "c0"),
        "squeeze": squeeze,
    }
    seq = h_seq.transpose(1, 0, 2)
    if squeeze:
        return seq[0], h_seq[-1][0], cache
    return seq, h_seq[-1], cache


def lstm_backward(cache, layer: LstmLayer, grad_h_seq: np.ndarray | None = None,
                  grad_h_final: np.ndarray | None = None):
    """Exact backpropagation through time.

    Upstream gradient may target the whole hidden sequence, the final hidden
    state, or both. Returns (grad_x, grads) where grads maps the 12 parameter
    field names to arrays matching the parameter shapes.
    """
    x3 = cache["x"]
    gates, c_seq, h_seq = cache["gates"], cache["c_seq"], cache["h_seq"]
    nb, t_len, _ = x3.shape
    h = layer.hidden
    w, u, _ = layer.packed()

    gseq = None
    if grad_h_seq is not None:
        gseq, _ = _as_batch(grad_h_seq, 2)
        if gseq.shape != (nb, t_len, h):
            raise ValueError(f"grad_h_seq shape {grad_h_seq.shape} does not match forward cache")
    dh_rec = np.zeros((nb, h), dtype=x3.dtype)
    if grad_h_final is not None:
        gfin, _ = _as_batch(grad_h_final, 1)
        if gfin.shape != (nb, h):
            raise ValueError(f"grad_h_final shape {grad_h_final.shape} does not match forward cache")
        dh_rec = dh_rec + gfin

    d_w = np.zeros_like(w)
    d_u = np.zeros_like(u)
    d_b = np.zeros(4 * h, dtype=x3.dtype)
    grad_x = np.empty_like(x3)
    dc_next = np.zeros((nb, h), dtype=x3.dtype)

    for t in range(t_len - 1, -1, -1):
        gi = gates[t, :, :h]
        gf = gates[t, :, h : 2 * h]
        go = gates[t, :, 2 * h : 3 * h]
        gg = gates[t, :, 3 * h :]
        tc = np.tanh(c_seq[t])
        c_prev = c_seq[t - 1] if t > 0 else cache["c0"]
        h_prev = h_seq[t - 1] if t > 0 else cache["h0"]

        dh = dh_rec if gseq is None else dh_rec + gseq[:, t, :]
        dc = dh * go * (1.0 - tc * tc) + dc_next
        da = np.concatenate(
            [
                dc * gg * gi * (1.0 - gi),  # input gate pre-activation
                dc * c_prev * gf * (1.0 - gf),  # forget gate
                dh * tc * go * (1.0 - go),  # output gate
                dc * gi * (1.0 - gg * gg),  # candidate
            ],
            axis=1,
        )
        d_w += x3[:, t, :].T @ da
        d_u += h_prev.T @ da
        d_b += da.sum(axis=0)
        grad_x[:, t, :] = da @ w.T
        dh_rec = da @ u.T
        dc_next = dc * gf

    grads = {}
    for gi_, name in enumerate(LstmLayer.GATES):
        sl = slice(gi_ * h, (gi_ + 1) * h)
        grads[f"W_{name}"] = d_w[:, sl]
        grads[f"U_{name}"] = d_u[:, sl]
        grads[f"b_{name}"] = d_b[sl]
    return (grad_x[0] if cache["squeeze"] else grad_x), grads
