"""Single-head and multi-head CNN-LSTM assembly.

Both architectures share one layout: one or three convolutional heads (four
conv layers, each followed by a size-2 stride-1 max pool), a per-timestep
channel concatenation of the head outputs, an LSTM whose final hidden state
passes through dropout and two dense layers, and a softmax readout.

The default configuration follows the published table: filters 512/128/64/32
with kernel 3 and stride 1, LSTM hidden size 128, dropout 0.3, a 1000-unit
dense layer, and 6 output classes. With 128-sample windows the temporal length
runs 128 -> 126 -> 125 -> 123 -> 122 -> 120 -> 119 -> 117 -> 116.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .nn import layers as L
from .nn.loss import softmax, softmax_cross_entropy

DEFAULT_FILTERS = (512, 128, 64, 32)


@dataclass(frozen=True)
class ModelSpec:
    """Immutable architecture description."""

    arch: str  # "single" | "multi"
    window_len: int = 128
    channels: int = 9
    filters: tuple[int, ...] = DEFAULT_FILTERS
    lstm_hidden: int = 128
    dropout: float = 0.3
    dense_units: int = 1000
    classes: int = 6

    def __post_init__(self):
        if self.arch not in ("single", "multi"):
            raise ValueError(f"arch must be 'single' or 'multi', got '{self.arch}'")
        if self.arch == "multi" and self.channels % 3 != 0:
            raise ValueError(f"multi-head arch needs channels divisible by 3, got {self.channels}")
        object.__setattr__(self, "filters", tuple(int(f) for f in self.filters))

    @property
    def num_heads(self) -> int:
        return 3 if self.arch == "multi" else 1

    @property
    def head_channels(self) -> int:
        return self.channels // self.num_heads

    def stage_lengths(self) -> list[int]:
        """Temporal length after the input and after every conv/pool stage."""
        lengths = [self.window_len]
        length = self.window_len
        for _ in self.filters:
            if length < L.KERNEL:
                raise ValueError(
                    f"window too short: length {length} reaches a conv (needs >= {L.KERNEL})"
                )
            length -= L.KERNEL - 1
            lengths.append(length)
            if length < L.POOL:
                raise ValueError(f"window too short: length {length} reaches a pool")
            length -= L.POOL - 1
            lengths.append(length)
        return lengths

    @property
    def merged_width(self) -> int:
        return self.filters[-1] * self.num_heads

    @property
    def merged_len(self) -> int:
        return self.stage_lengths()[-1]


@dataclass
class Model:
    """Instantiated layers plus a registry of every trainable tensor.

    Registry arrays alias the layer fields, so in-place optimizer updates are
    seen by the layers. Single-writer: do not train one instance from two
    threads; eval-mode inference is safe to share.
    """

    spec: ModelSpec
    heads: list[list[L.Conv1dLayer]]
    lstm: L.LstmLayer
    dropout: L.DropoutLayer
    fc_hidden: L.DenseLayer
    fc_out: L.DenseLayer
    params: dict[str, np.ndarray] = field(default_factory=dict)
    mode: str = "train"

    @property
    def dtype(self):
        return self.fc_out.weights.dtype


def _registry(model: Model) -> dict[str, np.ndarray]:
    params: dict[str, np.ndarray] = {}
    for hi, stack in enumerate(model.heads):
        for ci, conv in enumerate(stack):
            params[f"head{hi}.conv{ci}.W"] = conv.weights
            params[f"head{hi}.conv{ci}.b"] = conv.bias
    for name in ("W", "U", "b"):
        for gate in L.LstmLayer.GATES:
            params[f"lstm.{name}_{gate}"] = getattr(model.lstm, f"{name}_{gate}")
    params["dense0.W"] = model.fc_hidden.weights
    params["dense0.b"] = model.fc_hidden.bias
    params["dense1.W"] = model.fc_out.weights
    params["dense1.b"] = model.fc_out.bias
    return params


def build_model(spec: ModelSpec, seed: int, dtype=np.float32) -> Model:
    """Deterministically initialize all layers from `seed`."""
    spec.stage_lengths()  # fail loudly on impossible geometry before allocating
    param_ss, dropout_ss = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(param_ss)
    heads = []
    for _ in range(spec.num_heads):
        stack = []
        in_ch = spec.head_channels
        for out_ch in spec.filters:
            stack.append(nn.init_conv(rng, in_ch, out_ch, dtype))
            in_ch = out_ch
        heads.append(stack)
    lstm = nn.init_lstm(rng, spec.merged_width, spec.lstm_hidden, dtype)
    fc_hidden = nn.init_dense(rng, spec.lstm_hidden, spec.dense_units, dtype)
    fc_out = nn.init_dense(rng, spec.dense_units, spec.classes, dtype)
    dropout = L.DropoutLayer(rate=spec.dropout, rng=np.random.default_rng(dropout_ss))
    model = Model(spec=spec, heads=heads, lstm=lstm, dropout=dropout,
                  fc_hidden=fc_hidden, fc_out=fc_out)
    model.params = _registry(model)
    return model


def build_single_head(seed: int, filters=DEFAULT_FILTERS, dtype=np.float32) -> Model:
    return build_model(ModelSpec(arch="single", filters=tuple(filters)), seed, dtype)


def build_multi_head(seed: int, filters=DEFAULT_FILTERS, dtype=np.float32) -> Model:
    return build_model(ModelSpec(arch="multi", filters=tuple(filters)), seed, dtype)


def merge_heads(h1: np.ndarray, h2: np.ndarray, h3: np.ndarray) -> np.ndarray:
    """Concatenate head outputs along channels, preserving timestep alignment."""
    if not (h1.shape[:-1] == h2.shape[:-1] == h3.shape[:-1]):
        raise ValueError(
            f"head temporal lengths differ: {h1.shape}, {h2.shape}, {h3.shape}"
        )
    return np.concatenate([h1, h2, h3], axis=-1)


def forward_logits(model: Model, batch: np.ndarray, train: bool):
    """Raw class scores plus the caches the backward pass needs."""
    x = np.asarray(batch, dtype=model.dtype)
    if x.ndim != 3 or x.shape[1] != model.spec.window_len or x.shape[2] != model.spec.channels:
        raise ValueError(
            f"expected batch shaped (B, {model.spec.window_len}, {model.spec.channels}), "
            f"got {x.shape}"
        )
    hc = model.spec.head_channels
    head_caches = []
    head_outs = []
    for hi, stack in enumerate(model.heads):
        out = x[:, :, hi * hc : (hi + 1) * hc]
        stages = []
        for conv in stack:
            conv_in = out
            out = L.conv1d_forward(out, conv)
            out, pool_cache = L.maxpool_forward(out)
            stages.append((conv_in, pool_cache))
        head_caches.append(stages)
        head_outs.append(out)
    merged = head_outs[0] if len(head_outs) == 1 else merge_heads(*head_outs)
    _, h_final, lstm_cache = L.lstm_forward(merged, model.lstm)
    dropped, drop_mask = L.dropout_apply(h_final, model.dropout, train)
    hidden = L.dense_forward(dropped, model.fc_hidden)
    logits = L.dense_forward(hidden, model.fc_out)
    caches = {
        "heads": head_caches,
        "lstm": lstm_cache,
        "drop_in": h_final,
        "drop_mask": drop_mask,
        "dropped": dropped,
        "hidden": hidden,
        "logits": logits,
    }
    return logits, caches


def model_forward(model: Model, batch: np.ndarray):
    """Per-window class probabilities; caches returned only in train mode."""
    train = model.mode == "train"
    logits, caches = forward_logits(model, batch, train)
    probs = softmax(logits)
    return (probs, caches) if train else (probs, None)


def model_backward(model: Model, caches, grad_logits: np.ndarray) -> dict[str, np.ndarray]:
    """Chain every layer backward; returns gradients for the full registry."""
    grad_hidden, d1w, d1b = L.dense_backward(grad_logits, caches["hidden"], model.fc_out)
    grad_dropped, d0w, d0b = L.dense_backward(grad_hidden, caches["dropped"], model.fc_hidden)
    grad_h_final = L.dropout_backward(grad_dropped, caches["drop_mask"])
    grad_merged, lstm_grads = L.lstm_backward(caches["lstm"], model.lstm,
                                              grad_h_final=grad_h_final)
    grads: dict[str, np.ndarray] = {
        "dense0.W": d0w, "dense0.b": d0b, "dense1.W": d1w, "dense1.b": d1b,
    }
    for name, g in lstm_grads.items():
        grads[f"lstm.{name}"] = g
    width = model.spec.filters[-1]
    for hi, stack in enumerate(model.heads):
        g = grad_merged[..., hi * width : (hi + 1) * width]
        for ci in range(len(stack) - 1, -1, -1):
            conv_in, pool_cache = caches["heads"][hi][ci]
            g = L.maxpool_backward(g, pool_cache)
            g, gw, gb = L.conv1d_backward(g, conv_in, stack[ci])
            grads[f"head{hi}.conv{ci}.W"] = gw
            grads[f"head{hi}.conv{ci}.b"] = gb
    return grads


def predict(model: Model, batch: np.ndarray) -> np.ndarray:
    """Argmax class per window; ties resolve to the lowest class index."""
    logits, _ = forward_logits(model, batch, train=False)
    return np.argmax(logits, axis=1)


def count_parameters(model: Model) -> int:
    return sum(p.size for p in model.params.values())


def model_gradient_errors(seed: int) -> dict[str, float]:
    """Finite-difference check of the whole multi-head model on a shrunken spec.

    Dropout rate 0 keeps the train-mode forward deterministic under the
    repeated evaluations central differences need.
    """
    from .nn.gradcheck import numeric_gradient, relative_error

    spec = ModelSpec(arch="multi", window_len=8, channels=3, filters=(4, 3),
                     lstm_hidden=3, dropout=0.0, dense_units=5, classes=6)
    model = build_model(spec, seed, dtype=np.float64)
    rng = np.random.default_rng(seed + 1)
    batch = rng.standard_normal((2, spec.window_len, spec.channels))
    onehot = np.zeros((2, spec.classes))
    onehot[np.arange(2), rng.integers(spec.classes, size=2)] = 1.0

    def objective():
        logits, _ = forward_logits(model, batch, train=True)
        losses, _, _ = softmax_cross_entropy(logits, onehot)
        return float(losses.mean())

    logits, caches = forward_logits(model, batch, train=True)
    _, grad_logits, _ = softmax_cross_entropy(logits, onehot)
    grads = model_backward(model, caches, grad_logits / len(batch))
    return {
        name: relative_error(grads[name], numeric_gradient(objective, model.params[name]))
        for name in sorted(model.params)
    }
