"""Binary classification metrics with Aging (1) as the positive class."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import LengthMismatch


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    # names of ratios whose denominator was zero (reported as 0.0)
    undefined: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["undefined"] = list(self.undefined)
        return d


def score(predictions, truths) -> ConfusionMatrix:
    """Count tp/fp/tn/fn between two equal-length 0/1 sequences."""
    p = np.asarray(predictions, dtype=np.int64).ravel()
    t = np.asarray(truths, dtype=np.int64).ravel()
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.size} predictions vs {t.size} truths")
    bad = ~np.isin(p, (0, 1)) | ~np.isin(t, (0, 1))
    if bad.any():
        raise ValueError("predictions and truths must be 0/1")
    tp = int(np.sum((p == 1) & (t == 1)))
    fp = int(np.sum((p == 1) & (t == 0)))
    tn = int(np.sum((p == 0) & (t == 0)))
    fn = int(np.sum((p == 0) & (t == 1)))
    return ConfusionMatrix(tp, fp, tn, fn)


def _ratio(num, den, name, undefined):
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def derive(cm: ConfusionMatrix) -> Metrics:
    """Accuracy, precision, recall and F1; any 0/0 is reported as 0 and flagged."""
    undefined: list[str] = []
    accuracy = _ratio(cm.tp + cm.tn, cm.total, "accuracy", undefined)
    precision = _ratio(cm.tp, cm.tp + cm.fp, "precision", undefined)
    recall = _ratio(cm.tp, cm.tp + cm.fn, "recall", undefined)
    f1 = _ratio(2 * precision * recall, precision + recall, "f1", undefined)
    return Metrics(accuracy, precision, recall, f1, tuple(undefined))
