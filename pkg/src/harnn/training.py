"""Mini-batch training loop, per-epoch evaluation, history, and checkpoints.

The reference loop is single-threaded and fully deterministic: the config seed
drives the per-epoch shuffle, every mini-batch (including the final short one)
is trained on, batch gradients are averaged so the learning rate is
batch-size independent, and both splits are evaluated in eval mode after each
epoch. The learning rate is fixed for the whole run — no schedule, no early
stopping.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import CheckpointError, DivergenceError
from .fileio import write_text_atomic
from .models import Model, ModelSpec, build_model, forward_logits
from .nn import adam_step, init_adam
from .nn.loss import softmax_cross_entropy

CHECKPOINT_VERSION = 1
HISTORY_HEADER = "epoch,train_loss,train_acc,test_loss,test_acc"


@dataclass
class TrainConfig:
    epochs: int = 17
    batch_size: int = 32
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    test_loss: float
    test_acc: float


def epoch_batches(n: int, batch_size: int, rng: np.random.Generator | None,
                  shuffle: bool):
    """Yield index arrays covering 0..n-1 exactly once; the short tail is kept."""
    order = rng.permutation(n) if (shuffle and rng is not None) else np.arange(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def train(model: Model, train_data, test_data, config: TrainConfig,
          on_epoch=None):
    """Train in place and return (model, history).

    `train_data`/`test_data` are (signals, onehot) pairs of standardized
    windows. `on_epoch`, when given, receives each EpochRecord as it is
    appended (used by the CLI for progress lines).
    """
    x_train, y_train = _as_model_arrays(model, train_data)
    x_test, y_test = _as_model_arrays(model, test_data)
    state = init_adam(model.params, lr=config.lr, beta1=config.beta1, beta2=config.beta2)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    history: list[EpochRecord] = []
    n = x_train.shape[0]
    for epoch in range(1, config.epochs + 1):
        model.mode = "train"
        for bi, idx in enumerate(epoch_batches(n, config.batch_size, shuffle_rng,
                                               config.shuffle)):
            xb, yb = x_train[idx], y_train[idx]
            logits, caches = forward_logits(model, xb, train=True)
            losses, grad_logits, _ = softmax_cross_entropy(logits, yb)
            batch_loss = float(losses.mean())
            if not np.isfinite(batch_loss):
                raise DivergenceError(
                    f"non-finite training loss at epoch {epoch}, batch {bi}",
                    epoch=epoch, batch=bi,
                )
            grads = model_backward_averaged(model, caches, grad_logits)
            adam_step(model.params, grads, state)
        train_loss, train_acc, _ = evaluate(model, (x_train, y_train))
        test_loss, test_acc, _ = evaluate(model, (x_test, y_test))
        record = EpochRecord(epoch, train_loss, train_acc, test_loss, test_acc)
        history.append(record)
        if on_epoch is not None:
            on_epoch(record)
    model.mode = "eval"
    return model, history


def model_backward_averaged(model: Model, caches, grad_logits: np.ndarray):
    from .models import model_backward

    return model_backward(model, caches, grad_logits / grad_logits.shape[0])


def evaluate(model: Model, data, batch_size: int = 256):
    """Eval-mode mean loss, accuracy, and predictions over a (signals, onehot) pair."""
    x, y = _as_model_arrays(model, data)
    prior = model.mode
    model.mode = "eval"
    try:
        total = 0.0
        correct = 0
        preds = np.empty(x.shape[0], dtype=np.int64)
        truths = np.argmax(y, axis=1)
        for start in range(0, x.shape[0], batch_size):
            sl = slice(start, start + batch_size)
            logits, _ = forward_logits(model, x[sl], train=False)
            losses, _, _ = softmax_cross_entropy(logits, y[sl])
            total += float(np.sum(losses, dtype=np.float64))
            preds[sl] = np.argmax(logits, axis=1)
            correct += int(np.sum(preds[sl] == truths[sl]))
    finally:
        model.mode = prior
    n = x.shape[0]
    return total / n, correct / n, preds


def history_csv(history: list[EpochRecord]) -> str:
    lines = [HISTORY_HEADER]
    for r in history:
        lines.append(
            f"{r.epoch},{r.train_loss:.6f},{r.train_acc:.6f},{r.test_loss:.6f},{r.test_acc:.6f}"
        )
    return "\n".join(lines) + "\n"


def write_history(history: list[EpochRecord], path) -> None:
    write_text_atomic(path, history_csv(history))


def save_checkpoint(model: Model, path) -> None:
    """Single JSON document; float values serialize round-trip exact."""
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "arch": model.spec.arch,
        "spec": asdict(model.spec),
        "params": {
            name: {"shape": list(arr.shape), "data": arr.astype(np.float64).ravel().tolist()}
            for name, arr in model.params.items()
        },
    }
    write_text_atomic(path, json.dumps(doc, sort_keys=True))


def load_checkpoint(path, expect_arch: str | None = None, dtype=np.float32) -> Model:
    """Rebuild a Model whose parameters exactly match the saved ones."""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"missing checkpoint file: {path}")
    try:
        doc = json.loads(path.read_text())
        version = doc["format_version"]
        arch = doc["arch"]
        spec_fields = doc["spec"]
        params = doc["params"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint document: {path} ({exc})") from exc
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint format version {version} unsupported (expected {CHECKPOINT_VERSION})"
        )
    if expect_arch is not None and arch != expect_arch:
        raise CheckpointError(f"checkpoint arch '{arch}' does not match requested '{expect_arch}'")
    try:
        spec_fields = dict(spec_fields)
        spec_fields["filters"] = tuple(spec_fields["filters"])
        spec = ModelSpec(**spec_fields)
    except (TypeError, KeyError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint spec: {exc}") from exc
    if spec.arch != arch:
        raise CheckpointError(f"checkpoint arch tag '{arch}' disagrees with spec '{spec.arch}'")
    model = build_model(spec, seed=0, dtype=dtype)
    if set(params) != set(model.params):
        missing = sorted(set(model.params) ^ set(params))
        raise CheckpointError(f"checkpoint parameter names do not match spec: {missing}")
    for name, entry in params.items():
        target = model.params[name]
        try:
            shape = tuple(entry["shape"])
            values = np.asarray(entry["data"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"malformed checkpoint entry '{name}': {exc}") from exc
        if shape != target.shape or values.size != target.size:
            raise CheckpointError(
                f"checkpoint shape {shape} does not match {target.shape} for '{name}'"
            )
        # write through the existing buffer so layer fields stay aliased
        target[...] = values.reshape(shape).astype(dtype)
    model.mode = "eval"
    return model


def _as_model_arrays(model: Model, data):
    x, y = data
    x = np.asarray(x, dtype=model.dtype)
    y = np.asarray(y, dtype=model.dtype)
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"signals ({x.shape[0]}) and labels ({y.shape[0]}) disagree")
    return x, y
