"""UCI HAR on-disk ingestion: 9-channel windows, labels, engineered features.

Expected layout (as the dataset is distributed):
    <root>/train/Inertial Signals/<channel>_train.txt   one window per line,
                                                        128 space-separated floats
    <root>/train/y_train.txt                            one label (1..6) per line
    <root>/train/X_train.txt                            F floats per line
    <root>/features.txt, <root>/activity_labels.txt
and the same under <root>/test with the _test suffix.

Channel order is fixed: total acceleration x/y/z, body acceleration x/y/z,
body gyroscope x/y/z.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

WINDOW_LEN = 128
NUM_CHANNELS = 9
NUM_CLASSES = 6

CHANNEL_NAMES = (
    "total_acc_x", "total_acc_y", "total_acc_z",
    "body_acc_x", "body_acc_y", "body_acc_z",
    "body_gyro_x", "body_gyro_y", "body_gyro_z",
)

STD_EPSILON = 1e-8


@dataclass
class LabelSet:
    onehot: np.ndarray  # (N, 6) of {0., 1.}
    class_names: list[str]

    @property
    def indices(self) -> np.ndarray:
        return np.argmax(self.onehot, axis=1)


@dataclass
class FeatureTable:
    features: np.ndarray  # (N, F)


@dataclass
class StandardizationStats:
    mean: np.ndarray  # (9,)
    std: np.ndarray  # (9,), clamped at STD_EPSILON


@dataclass
class WindowedDataset:
    """One split: raw windows, one-hot labels, and optional feature vectors."""

    signals: np.ndarray  # (N, 128, 9)
    labels: LabelSet
    features: FeatureTable | None = None

    @property
    def class_names(self) -> list[str]:
        return self.labels.class_names

    def __len__(self) -> int:
        return self.signals.shape[0]


def _read_matrix(path: Path, expected_cols: int | None = None) -> np.ndarray:
    """Parse a whitespace-separated float matrix with per-row validation."""
    if not path.is_file():
        raise DataError(f"missing dataset file: {path}")
    rows = [line.split() for line in path.read_text().splitlines() if line.strip()]
    if not rows:
        raise DataError(f"empty dataset file: {path}")
    widths = {len(r) for r in rows}
    want = expected_cols if expected_cols is not None else len(rows[0])
    if widths != {want}:
        bad = next(i for i, r in enumerate(rows) if len(r) != want)
        raise DataError(f"{path}: row {bad} has {len(rows[bad])} values, expected {want}")
    flat = [v for r in rows for v in r]
    try:
        arr = np.asarray(flat, dtype=np.float64)
    except ValueError:
        bad_row, bad_val = next(
            (i, v) for i, r in enumerate(rows) for v in r if not _is_float(v)
        )
        raise DataError(f"{path}: row {bad_row} has unparsable value '{bad_val}'") from None
    arr = arr.reshape(len(rows), want)
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr).all(axis=1))[0][0])
        raise DataError(f"{path}: row {bad} contains a non-finite value")
    return arr


def _is_float(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_inertial_signals(data_dir: str | Path, split: str) -> np.ndarray:
    """Assemble the (N, 128, 9) window tensor from the nine per-channel files."""
    _check_split(split)
    sig_dir = Path(data_dir) / split / "Inertial Signals"
    channels = []
    for name in CHANNEL_NAMES:
        arr = _read_matrix(sig_dir / f"{name}_{split}.txt", expected_cols=WINDOW_LEN)
        channels.append(arr)
    counts = {c.shape[0] for c in channels}
    if len(counts) != 1:
        raise DataError(
            f"row-count mismatch across the nine signal files under {sig_dir}: {sorted(counts)}"
        )
    return np.stack(channels, axis=2)


def load_labels(data_dir: str | Path, split: str) -> LabelSet:
    """One-hot encode y_<split>.txt; label k maps to index k-1."""
    _check_split(split)
    root = Path(data_dir)
    raw = _read_matrix(root / split / f"y_{split}.txt", expected_cols=1)[:, 0]
    ints = raw.astype(np.int64)
    if not np.all(ints == raw):
        raise DataError(f"non-integer label in y_{split}.txt")
    if ints.min() < 1 or ints.max() > NUM_CLASSES:
        bad = int(ints[(ints < 1) | (ints > NUM_CLASSES)][0])
        raise DataError(f"label {bad} out of range 1..{NUM_CLASSES} in y_{split}.txt")
    onehot = np.zeros((len(ints), NUM_CLASSES), dtype=np.float64)
    onehot[np.arange(len(ints)), ints - 1] = 1.0
    return LabelSet(onehot=onehot, class_names=load_class_names(data_dir))


def load_class_names(data_dir: str | Path) -> list[str]:
    path = Path(data_dir) / "activity_labels.txt"
    if not path.is_file():
        raise DataError(f"missing dataset file: {path}")
    pairs = []
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        idx, name = line.split(maxsplit=1)
        pairs.append((int(idx), name.strip()))
    pairs.sort()
    names = [name for _, name in pairs]
    if len(names) != NUM_CLASSES:
        raise DataError(f"{path}: expected {NUM_CLASSES} activities, found {len(names)}")
    return names


def load_feature_table(data_dir: str | Path, split: str) -> FeatureTable:
    """(N, F) engineered features; F comes from the features.txt line count."""
    _check_split(split)
    root = Path(data_dir)
    feat_file = root / "features.txt"
    if not feat_file.is_file():
        raise DataError(f"missing dataset file: {feat_file}")
    num_features = sum(1 for line in feat_file.read_text().splitlines() if line.strip())
    if num_features == 0:
        raise DataError(f"empty dataset file: {feat_file}")
    table = _read_matrix(root / split / f"X_{split}.txt", expected_cols=num_features)
    return FeatureTable(features=table)


def load_split(data_dir: str | Path, split: str, with_features: bool = False) -> WindowedDataset:
    """Load one split and cross-check window counts across files."""
    signals = load_inertial_signals(data_dir, split)
    labels = load_labels(data_dir, split)
    if labels.onehot.shape[0] != signals.shape[0]:
        raise DataError(
            f"{split}: {labels.onehot.shape[0]} labels but {signals.shape[0]} signal windows"
        )
    features = None
    if with_features:
        features = load_feature_table(data_dir, split)
        if features.features.shape[0] != signals.shape[0]:
            raise DataError(
                f"{split}: {features.features.shape[0]} feature rows but "
                f"{signals.shape[0]} signal windows"
            )
    return WindowedDataset(signals=signals, labels=labels, features=features)


def fit_standardizer(train: np.ndarray) -> StandardizationStats:
    """Per-channel mean/std over all windows and timesteps of the train split.

    Population (1/N) std with 64-bit accumulation; degenerate channels are
    clamped at 1e-8 and surfaced as a warning.
    """
    x = np.asarray(train)
    if x.ndim != 3 or x.shape[0] < 2:
        raise ValueError(f"need a (N>=2, T, C) tensor, got shape {x.shape}")
    mean = x.mean(axis=(0, 1), dtype=np.float64)
    std = x.std(axis=(0, 1), dtype=np.float64)
    degenerate = std < STD_EPSILON
    if degenerate.any():
        which = [CHANNEL_NAMES[c] if x.shape[2] == NUM_CHANNELS else str(c)
                 for c in np.flatnonzero(degenerate)]
        warnings.warn(f"degenerate channel std clamped to {STD_EPSILON}: {', '.join(which)}")
        std = np.maximum(std, STD_EPSILON)
    return StandardizationStats(mean=mean, std=std)


def apply_standardizer(x: np.ndarray, stats: StandardizationStats) -> np.ndarray:
    """out[n, t, c] = (x[n, t, c] - mean[c]) / std[c]."""
    return (np.asarray(x) - stats.mean) / stats.std


def split_streams(x: np.ndarray):
    """Slice the 9 channels into (total_acc, body_acc, body_gyro), 3 each."""
    x = np.asarray(x)
    if x.shape[-1] != NUM_CHANNELS:
        raise ValueError(f"expected {NUM_CHANNELS} channels, got {x.shape[-1]}")
    return x[..., 0:3], x[..., 3:6], x[..., 6:9]


def channel_histogram(x: np.ndarray, channel: int, bins: int):
    """Equal-width histogram of one channel over all windows and timesteps.

    Returns (edges, counts) with len(edges) == bins + 1; counts sum to N*T.
    A constant channel gets a unit-width range centred on its value.
    """
    x = np.asarray(x)
    if x.size == 0:
        raise ValueError("empty signal tensor")
    if not 0 <= channel < x.shape[-1]:
        raise ValueError(f"channel {channel} out of range 0..{x.shape[-1] - 1}")
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    values = x[..., channel].ravel()
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return edges, counts


def histogram_csv(edges: np.ndarray, counts: np.ndarray) -> str:
    lines = ["bin_lo,bin_hi,count"]
    for i, count in enumerate(counts):
        lines.append(f"{edges[i]:.9g},{edges[i + 1]:.9g},{int(count)}")
    return "\n".join(lines) + "\n"


def channel_skewness(x: np.ndarray, channel: int) -> float:
    """Population skewness of one channel; recorded in summaries, never asserted."""
    values = np.asarray(x)[..., channel].ravel().astype(np.float64)
    centered = values - values.mean()
    m2 = np.mean(centered**2)
    if m2 == 0.0:
        return 0.0
    return float(np.mean(centered**3) / m2**1.5)


def _check_split(split: str) -> None:
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got '{split}'")
