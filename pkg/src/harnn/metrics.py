"""Confusion matrix and precision/recall/F1 reporting.

Conventions: rows are true classes, columns predicted; precision = diag/colsum,
recall = diag/rowsum, F1 their harmonic mean. Undefined ratios (zero
denominator) report 0.0 and are flagged rather than NaN. Aggregates are
support-weighted and macro (unweighted); accuracy = trace/total.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (K, K) int64, [true][pred]
    class_names: list[str]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def supports(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def confusion(preds, truths, class_names: list[str]) -> ConfusionMatrix:
    preds = np.asarray(preds, dtype=np.int64)
    truths = np.asarray(truths, dtype=np.int64)
    if preds.shape != truths.shape or preds.ndim != 1:
        raise ValueError(f"preds {preds.shape} and truths {truths.shape} must be equal rank-1")
    k = len(class_names)
    for name, arr in (("prediction", preds), ("truth", truths)):
        if arr.size and (arr.min() < 0 or arr.max() >= k):
            bad = int(arr[(arr < 0) | (arr >= k)][0])
            raise ValueError(f"{name} class {bad} out of range 0..{k - 1}")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (truths, preds), 1)
    return ConfusionMatrix(counts=counts, class_names=list(class_names))


def classification_report(cm: ConfusionMatrix) -> dict:
    """Per-class records keyed by class name, plus weighted/macro/accuracy."""
    counts = cm.counts
    total = cm.total
    if total == 0:
        raise ValueError("empty confusion matrix")
    diag = np.diag(counts).astype(np.float64)
    rowsum = counts.sum(axis=1).astype(np.float64)
    colsum = counts.sum(axis=0).astype(np.float64)

    report: dict = {}
    precisions, recalls, f1s = [], [], []
    for c, name in enumerate(cm.class_names):
        flags = []
        if colsum[c] > 0:
            precision = diag[c] / colsum[c]
        else:
            precision = 0.0
            flags.append("precision_undefined")
        if rowsum[c] > 0:
            recall = diag[c] / rowsum[c]
        else:
            recall = 0.0
            flags.append("recall_undefined")
        f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(f1)
        report[name] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": int(rowsum[c]),
            "flags": flags,
        }

    supports = rowsum
    weighted_precision = float(np.dot(supports, precisions) / total)
    # support-weighted recall is algebraically trace/total; computing it from
    # the integer sums keeps the identity with accuracy exact in floats
    weighted_recall = float(diag.sum() / total)
    weighted_f1 = float(np.dot(supports, f1s) / total)
    k = len(cm.class_names)
    report["weighted"] = {
        "precision": weighted_precision,
        "recall": weighted_recall,
        "f1": weighted_f1,
        "support": total,
    }
    report["macro"] = {
        "precision": float(np.mean(precisions)) if k else 0.0,
        "recall": float(np.mean(recalls)) if k else 0.0,
        "f1": float(np.mean(f1s)) if k else 0.0,
        "support": total,
    }
    report["accuracy"] = float(diag.sum() / total)
    return report


def confusion_csv(cm: ConfusionMatrix) -> str:
    """Header of predicted-class names; one row per true class, name first."""
    lines = ["," + ",".join(cm.class_names)]
    for name, row in zip(cm.class_names, cm.counts):
        lines.append(name + "," + ",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"
