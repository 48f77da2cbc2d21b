"""Confusion matrix and Table-style classification metrics (macro averaged)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

__all__ = ["ConfusionMatrix", "MetricsReport", "confusion", "report", "mean_report"]


@dataclass(frozen=True)
class ConfusionMatrix:
    """``counts[t, p]`` is the number of samples of true class t predicted as p."""

    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f_score: float
    loss: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "MetricsReport":
        return cls(**{k: float(d[k]) for k in ("accuracy", "precision", "recall", "f_score", "loss")})


def confusion(y_true, y_pred, n_classes: int) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=int).ravel()
    y_pred = np.asarray(y_pred, dtype=int).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.size} true vs {y_pred.size} predicted labels")
    for name, y in (("y_true", y_true), ("y_pred", y_pred)):
        if y.size and (y.min() < 0 or y.max() >= n_classes):
            raise ValueError(f"{name} has labels outside [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(counts, (y_true, y_pred), 1)
    return ConfusionMatrix(counts)


def _safe_div(num, den):
    return np.divide(num, den, out=np.zeros_like(num, dtype=float), where=den != 0)


def report(cm: ConfusionMatrix, val_loss: float) -> MetricsReport:
    """Accuracy plus macro precision/recall; F is the harmonic mean of the macro values.

    Per-class precision or recall with a zero denominator counts as 0.
    """
    if cm.total == 0:
        raise ValueError("cannot report metrics on an empty confusion matrix")
    c = cm.counts.astype(float)
    tp = np.diag(c)
    precision = float(np.mean(_safe_div(tp, c.sum(axis=0))))
    recall = float(np.mean(_safe_div(tp, c.sum(axis=1))))
    f = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return MetricsReport(
        accuracy=float(tp.sum() / cm.total),
        precision=precision,
        recall=recall,
        f_score=float(f),
        loss=float(val_loss),
    )


def mean_report(reports) -> MetricsReport:
    """Field-wise arithmetic mean of several reports."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to average")
    fields = ("accuracy", "precision", "recall", "f_score", "loss")
    return MetricsReport(
        **{k: float(np.mean([getattr(r, k) for r in reports])) for k in fields}
    )
