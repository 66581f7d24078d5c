"""Classification metrics: accuracy, per-class and macro F1, confusion matrix.

Macro F1 averages per-class F1 over the classes present in the gold labels;
classes a model predicts but that never occur in gold still show up in the
confusion matrix but do not enter the macro mean.  F1 is 0 by convention
when precision + recall is 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .store import DataError


@dataclass(frozen=True, eq=False)
class EvalReport:
    accuracy: float
    per_class_f1: dict[str, float]
    macro_f1: float
    confusion: np.ndarray  # rows = gold, columns = predicted
    label_order: tuple[str, ...]
    n: int
    majority_baseline_accuracy: float

    def __eq__(self, other):
        if not isinstance(other, EvalReport):
            return NotImplemented
        return (
            self.accuracy == other.accuracy
            and self.per_class_f1 == other.per_class_f1
            and self.macro_f1 == other.macro_f1
            and np.array_equal(self.confusion, other.confusion)
            and self.label_order == other.label_order
            and self.n == other.n
            and self.majority_baseline_accuracy == other.majority_baseline_accuracy
        )

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class_f1": dict(self.per_class_f1),
            "macro_f1": self.macro_f1,
            "confusion": self.confusion.tolist(),
            "label_order": list(self.label_order),
            "n": self.n,
            "majority_baseline_accuracy": self.majority_baseline_accuracy,
        }


def confusion_to_csv(report: EvalReport) -> str:
    """Confusion matrix as CSV, gold labels on rows, predictions on columns."""
    lines = ["gold\\pred," + ",".join(report.label_order)]
    for i, label in enumerate(report.label_order):
        lines.append(label + "," + ",".join(str(int(c)) for c in report.confusion[i]))
    return "\n".join(lines) + "\n"


def majority_baseline(gold: Sequence[str]) -> float:
    """Accuracy of always predicting the most frequent gold label."""
    if len(gold) == 0:
        raise DataError("empty gold sequence")
    counts: dict[str, int] = {}
    for g in gold:
        counts[g] = counts.get(g, 0) + 1
    return max(counts.values()) / len(gold)


def evaluate(
    gold: Sequence[str], pred: Sequence[str], label_order: Sequence[str]
) -> EvalReport:
    """Full classification report for aligned gold/predicted label sequences."""
    gold = list(gold)
    pred = list(pred)
    if len(gold) != len(pred):
        raise DataError(f"length mismatch: {len(gold)} gold vs {len(pred)} predictions")
    if not gold:
        raise DataError("empty evaluation input")
    label_order = tuple(label_order)
    pos = {label: i for i, label in enumerate(label_order)}
    if len(pos) != len(label_order):
        raise DataError("duplicate labels in label order")
    n_labels = len(label_order)
    confusion = np.zeros((n_labels, n_labels), dtype=np.int64)
    for g, p in zip(gold, pred):
        if g not in pos:
            raise DataError(f"unknown gold label {g!r}")
        if p not in pos:
            raise DataError(f"unknown predicted label {p!r}")
        confusion[pos[g], pos[p]] += 1

    n = len(gold)
    accuracy = float(np.trace(confusion)) / n
    gold_counts = confusion.sum(axis=1)
    pred_counts = confusion.sum(axis=0)
    per_class_f1: dict[str, float] = {}
    for i, label in enumerate(label_order):
        if gold_counts[i] == 0:
            continue
        tp = float(confusion[i, i])
        precision = tp / pred_counts[i] if pred_counts[i] else 0.0
        recall = tp / gold_counts[i]
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class_f1[label] = f1
    macro_f1 = float(np.mean(list(per_class_f1.values())))
    return EvalReport(
        accuracy=accuracy,
        per_class_f1=per_class_f1,
        macro_f1=macro_f1,
        confusion=confusion,
        label_order=label_order,
        n=n,
        majority_baseline_accuracy=float(gold_counts.max()) / n,
    )
