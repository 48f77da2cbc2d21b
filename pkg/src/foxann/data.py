"""Dataset loading, min-max scaling, one-hot targets and stratified folds.

CSV format: UTF-8, comma separated, one header row, numeric feature
columns, class label (text or integer) in the last column. Class indices
follow the order in which labels first appear in the file.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

__all__ = [
    "Dataset",
    "Scaler",
    "Split",
    "FoldSplit",
    "BUNDLED",
    "load_csv",
    "load_dataset",
    "fit_scaler",
    "apply_scaler",
    "one_hot",
    "stratified_k_fold",
]

BUNDLED = {
    "iris": "iris.csv",
    "breast_cancer": "breast_cancer_wisconsin.csv",
    "wine": "wine.csv",
}


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_names: tuple
    feature_names: tuple
    name: str

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def targets(self) -> np.ndarray:
        return one_hot(self.labels, self.n_classes)


@dataclass(frozen=True)
class Split:
    """Rows of a dataset handed to a trainer."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    @property
    def targets(self) -> np.ndarray:
        return one_hot(self.labels, self.n_classes)


@dataclass(frozen=True)
class FoldSplit:
    fold_index: int
    train_indices: np.ndarray
    val_indices: np.ndarray


def load_csv(path, name: Optional[str] = None) -> Dataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return _parse_rows(rows, name or path.stem, str(path))


def load_dataset(name_or_path: str) -> Dataset:
    """Load a bundled dataset by name, or any CSV file by path."""
    if name_or_path in BUNDLED:
        ref = resources.files("foxann").joinpath("datasets").joinpath(BUNDLED[name_or_path])
        with ref.open("r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        return _parse_rows(rows, name_or_path, BUNDLED[name_or_path])
    path = Path(name_or_path)
    if path.suffix.lower() == ".csv" and path.exists():
        return load_csv(path)
    raise DataError(
        f"unknown dataset {name_or_path!r}; valid names: {', '.join(BUNDLED)} "
        "(or a path to an existing .csv file)"
    )


def _parse_rows(rows: List[List[str]], name: str, source: str) -> Dataset:
    if len(rows) < 2:
        raise DataError(f"{source}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise DataError(f"{source}: need at least one feature column and a label column")
    n_cols = len(header)
    feats, labels = [], []
    for r, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != n_cols:
            raise DataError(f"{source}: row {r} has {len(row)} cells, expected {n_cols}")
        values = []
        for c, cell in enumerate(row[:-1]):
            cell = cell.strip()
            if not cell:
                raise DataError(f"{source}: missing value at row {r}, column {c + 1} ({header[c]!r})")
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{source}: non-numeric value {cell!r} at row {r}, column {c + 1} ({header[c]!r})"
                ) from None
            if not math.isfinite(v):
                raise DataError(f"{source}: non-finite value at row {r}, column {c + 1}")
            values.append(v)
        label = row[-1].strip()
        if not label:
            raise DataError(f"{source}: missing label at row {r}, column {n_cols} ({header[-1]!r})")
        feats.append(values)
        labels.append(label)

    class_names = list(dict.fromkeys(labels))
    if len(class_names) < 2:
        raise DataError(f"{source}: need at least 2 classes, found {len(class_names)}")
    index = {c: i for i, c in enumerate(class_names)}
    return Dataset(
        features=np.array(feats, dtype=float),
        labels=np.array([index[l] for l in labels], dtype=int),
        class_names=tuple(class_names),
        feature_names=tuple(header[:-1]),
        name=name,
    )


@dataclass(frozen=True)
class Scaler:
    x_min: np.ndarray
    x_max: np.ndarray

    def transform(self, features) -> np.ndarray:
        return apply_scaler(self, features)

    def to_dict(self) -> dict:
        return {"x_min": self.x_min.tolist(), "x_max": self.x_max.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Scaler":
        return cls(np.asarray(d["x_min"], dtype=float), np.asarray(d["x_max"], dtype=float))


def fit_scaler(features) -> Scaler:
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError(f"expected a non-empty 2-D feature matrix, got shape {X.shape}")
    return Scaler(X.min(axis=0), X.max(axis=0))


def apply_scaler(scaler: Scaler, features) -> np.ndarray:
    """Min-max scale; a constant feature maps to 0. Values are not clamped."""
    X = np.asarray(features, dtype=float)
    span = scaler.x_max - scaler.x_min
    constant = span == 0
    out = (X - scaler.x_min) / np.where(constant, 1.0, span)
    out[..., constant] = 0.0
    return out


def one_hot(label, n_classes: int) -> np.ndarray:
    """One-hot encode a single label (vector out) or an array of labels (matrix out)."""
    labels = np.asarray(label)
    if labels.dtype.kind not in "iu":
        if not np.all(labels == np.round(labels)):
            raise ValueError(f"labels must be integers, got {label!r}")
        labels = labels.astype(int)
    if np.any(labels < 0) or np.any(labels >= n_classes):
        raise ValueError(f"label out of range [0, {n_classes}): {label!r}")
    return np.eye(n_classes)[labels]


def stratified_k_fold(dataset, k: int = 10, seed: int = 0) -> List[FoldSplit]:
    """Seeded stratified k-fold split.

    Each class is shuffled and dealt round-robin into the folds, continuing
    from where the previous class stopped, so per-class fold counts differ
    by at most one and fold sizes stay balanced. Classes with fewer than
    ``k`` members trigger a warning and a plain shuffled k-fold split.
    """
    labels = dataset.labels if isinstance(dataset, Dataset) else np.asarray(dataset)
    n = len(labels)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of samples ({n})")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=int)
    classes, counts = np.unique(labels, return_counts=True)
    if counts.min() < k:
        warnings.warn(
            f"smallest class has {counts.min()} members < k={k}; using plain k-fold",
            stacklevel=2,
        )
        order = rng.permutation(n)
        fold_of[order] = np.arange(n) % k
    else:
        offset = 0
        for c in classes:
            members = rng.permutation(np.flatnonzero(labels == c))
            fold_of[members] = (offset + np.arange(len(members))) % k
            offset = (offset + len(members)) % k
    all_idx = np.arange(n)
    return [
        FoldSplit(f, all_idx[fold_of != f], all_idx[fold_of == f]) for f in range(k)
    ]
