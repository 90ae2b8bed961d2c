"""Three-class confusion matrix with per-class and macro precision, recall and F1."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tangent import NORMAL, PUMP_FAULT, SYSTEM_FAULT

CLASSES = (NORMAL, PUMP_FAULT, SYSTEM_FAULT)


class LengthMismatch(ValueError):
    pass


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


@dataclass(frozen=True)
class ConfusionMatrix:
    """``counts[i, j]``: samples of true class ``i`` predicted as class ``j``."""

    counts: np.ndarray
    classes: tuple[str, ...] = CLASSES

    def __post_init__(self):
        k = len(self.classes)
        if self.counts.shape != (k, k) or np.any(self.counts < 0):
            raise ValueError("counts must be a non-negative square matrix matching the classes")

    def precision(self, cls: str) -> float:
        j = self.classes.index(cls)
        return _ratio(self.counts[j, j], self.counts[:, j].sum())

    def recall(self, cls: str) -> float:
        i = self.classes.index(cls)
        return _ratio(self.counts[i, i], self.counts[i, :].sum())

    def f1(self, cls: str) -> float:
        p, r = self.precision(cls), self.recall(cls)
        return _ratio(2 * p * r, p + r)

    def macro(self) -> dict[str, float]:
        return {
            "precision": float(np.mean([self.precision(c) for c in self.classes])),
            "recall": float(np.mean([self.recall(c) for c in self.classes])),
            "f1": float(np.mean([self.f1(c) for c in self.classes])),
        }

    def count(self, truth: str, predicted: str) -> int:
        return int(self.counts[self.classes.index(truth), self.classes.index(predicted)])

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def classification_metrics(predicted: Sequence[str], truth: Sequence[str]) -> ConfusionMatrix:
    if len(predicted) != len(truth):
        raise LengthMismatch(f"{len(predicted)} predictions for {len(truth)} truth labels")
    index = {c: i for i, c in enumerate(CLASSES)}
    counts = np.zeros((3, 3), dtype=np.int64)
    for p, t in zip(predicted, truth):
        if p not in index or t not in index:
            raise ValueError(f"unknown label {p if p not in index else t!r}")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(counts)
