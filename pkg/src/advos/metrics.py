"""Confusion matrices, average class-specific accuracy (ACSA) and geometric mean (GM).

Both scores are reported in percent. ACSA is macro-averaged recall; for two
classes it is exactly ``0.5 * (tp/Np + tn/Nn)``. GM is the C-th root of the
product of per-class recalls and is exactly zero when any class is missed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import MetricError


def confusion(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Entry (i, j) counts samples of true class i predicted as j."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise MetricError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    for arr in (y_true, y_pred):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise MetricError(f"label out of range 0..{n_classes - 1}")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def recalls(cm) -> np.ndarray:
    cm = np.asarray(cm)
    support = cm.sum(axis=1)
    if np.any(support == 0):
        raise MetricError(f"class(es) {np.flatnonzero(support == 0).tolist()} absent from y_true")
    return np.diag(cm) / support


def acsa(cm) -> float:
    return float(100.0 * np.mean(recalls(cm)))


def gmean(cm) -> float:
    r = recalls(cm)
    if np.any(r == 0):
        return 0.0
    return float(100.0 * np.exp(np.mean(np.log(r))))


@dataclass
class EvalReport:
    confusion: np.ndarray
    recalls: np.ndarray = field(init=False)
    acsa: float = field(init=False)
    gm: float = field(init=False)
    epoch: Optional[int] = None

    def __post_init__(self):
        self.confusion = np.asarray(self.confusion, dtype=np.int64)
        self.recalls = recalls(self.confusion)
        self.acsa = acsa(self.confusion)
        self.gm = gmean(self.confusion)

    @classmethod
    def from_predictions(cls, y_true, y_pred, n_classes: int, epoch=None) -> "EvalReport":
        return cls(confusion(y_true, y_pred, n_classes), epoch=epoch)

    def to_dict(self) -> dict:
        return {
            "acsa": round(self.acsa, 2),
            "gm": round(self.gm, 2),
            "recalls": [round(float(r), 6) for r in self.recalls],
            "confusion": self.confusion.tolist(),
            "epoch": self.epoch,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(np.asarray(d["confusion"]), epoch=d.get("epoch"))
