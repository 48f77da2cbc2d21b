"""Training procedures: FOXANN, backpropagation ANN and logistic regression.

All three return a :class:`TrainedModel` and an :class:`EpochTrace` with one
train/validation loss pair per epoch. For FOXANN an epoch is one FOX
iteration, i.e. one update of the whole population.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from . import fox
from .data import Scaler, Split
from .mlp import Network, Topology, flatten, forward, unflatten, weight_count

__all__ = [
    "TrainConfig",
    "EpochTrace",
    "TrainedModel",
    "loss",
    "foxann_objective",
    "backprop_gradient",
    "train_foxann",
    "train_backprop",
    "train_logreg",
    "MODEL_KINDS",
]

MODEL_KINDS = ("foxann", "ann_backprop", "logreg")
LOSS_MODES = ("mean", "half_sum")
MODEL_FORMAT = "foxann-model/1"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    weight_low: float = -3.0
    weight_high: float = 3.0
    population_size: int = 30
    learning_rate: float = 0.1
    seed: int = 0
    loss_mode: str = "mean"
    a_schedule: str = "decreasing"
    exploration: str = "scaled"
    n_jobs: Optional[int] = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.weight_low < self.weight_high:
            raise ValueError(
                f"weight_low ({self.weight_low}) must be < weight_high ({self.weight_high})"
            )
        if self.population_size < 1:
            raise ValueError(f"population_size must be >= 1, got {self.population_size}")
        # 0 is accepted: it freezes the weights, which tests rely on
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"loss_mode must be one of {LOSS_MODES}, got {self.loss_mode!r}")

    def fox_params(self) -> fox.FoxParams:
        return fox.FoxParams(
            population_size=self.population_size,
            max_iterations=self.epochs,
            a_schedule=self.a_schedule,
            exploration=self.exploration,
        )


@dataclass
class EpochTrace:
    train_loss: np.ndarray
    val_loss: np.ndarray

    def __len__(self):
        return len(self.train_loss)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "val_loss"])
            for e, (tr, va) in enumerate(zip(self.train_loss, self.val_loss), start=1):
                w.writerow([e, repr(float(tr)), repr(float(va))])


@dataclass
class TrainedModel:
    """A fitted classifier.

    ``weights`` uses the flat layout of :mod:`foxann.mlp`. A logistic
    regression model is stored as a single ``[n_features, n_classes]``
    layer whose outputs go through softmax instead of sigmoid.
    """

    kind: str
    topology: Topology
    weights: np.ndarray
    train_loss: float = math.nan
    val_loss: float = math.nan
    scaler: Optional[Scaler] = None
    class_names: Optional[Sequence[str]] = None
    config: dict = field(default_factory=dict)

    @property
    def network(self) -> Network:
        return unflatten(self.weights, self.topology)

    def predict_proba(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=float)
        if self.kind == "logreg":
            net = self.network
            return _softmax(X @ net.weights[0] + net.biases[0])
        return forward(self.network, X)

    def predict(self, features) -> np.ndarray:
        return np.argmax(self.predict_proba(features), axis=-1)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "kind": self.kind,
            "activation": "softmax" if self.kind == "logreg" else "sigmoid",
            "topology": list(self.topology.layer_sizes),
            "weights": [float(v) for v in self.weights],
            "normalization": self.scaler.to_dict() if self.scaler is not None else None,
            "class_names": list(self.class_names) if self.class_names is not None else None,
            "train_loss": float(self.train_loss),
            "val_loss": float(self.val_loss),
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d) -> "TrainedModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format {d.get('format')!r}")
        norm = d.get("normalization")
        return cls(
            kind=d["kind"],
            topology=Topology(d["topology"]),
            weights=np.asarray(d["weights"], dtype=float),
            train_loss=float(d["train_loss"]),
            val_loss=float(d["val_loss"]),
            scaler=Scaler.from_dict(norm) if norm is not None else None,
            class_names=d.get("class_names"),
            config=d.get("config", {}),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "TrainedModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def loss(targets, outputs, mode: str = "mean") -> float:
    """Squared error between one-hot targets and outputs.

    ``"half_sum"`` is ``0.5 * sum((y - y')**2)``; ``"mean"`` divides the
    plain sum by the number of entries ``N * C``.
    """
    y = np.asarray(targets, dtype=float)
    o = np.asarray(outputs, dtype=float)
    if y.shape != o.shape:
        raise ValueError(f"shape mismatch: targets {y.shape} vs outputs {o.shape}")
    sq = np.sum((y - o) ** 2)
    if mode == "half_sum":
        return float(0.5 * sq)
    if mode == "mean":
        return float(sq / y.size) if y.size else 0.0
    raise ValueError(f"unknown loss mode {mode!r}")


def foxann_objective(weights, topology, features, targets) -> float:
    """Mean squared error of the network encoded by ``weights``."""
    return loss(targets, forward(unflatten(weights, topology), features), "mean")


def _softmax(s):
    s = s - s.max(axis=-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=-1, keepdims=True)


def _check_splits(train: Split, val: Split, n_inputs: int, n_outputs: int):
    for name, sp in (("train", train), ("val", val)):
        if sp.features.ndim != 2 or sp.features.shape[1] != n_inputs:
            raise ValueError(
                f"{name} split has feature shape {sp.features.shape}, expected (*, {n_inputs})"
            )
        if sp.n_classes != n_outputs:
            raise ValueError(f"{name} split has {sp.n_classes} classes, expected {n_outputs}")
    if len(train.labels) == 0:
        raise ValueError("empty training split")


def train_foxann(train: Split, val: Split, topology: Topology, cfg: TrainConfig = TrainConfig()):
    """Optimize the flat weight vector with FOX, one FOX iteration per epoch.

    The trace holds the best-so-far training loss and the validation loss of
    the incumbent best weights after each epoch.
    """
    topology = topology if isinstance(topology, Topology) else Topology(topology)
    _check_splits(train, val, topology.n_inputs, topology.n_outputs)
    X_tr, Y_tr = train.features, train.targets
    X_va, Y_va = val.features, val.targets
    mode = cfg.loss_mode

    def objective(w):
        return loss(Y_tr, forward(unflatten(w, topology), X_tr), mode)

    val_losses = np.empty(cfg.epochs)
    cache = {}

    def record(it, pop):
        key = pop.best_position.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = loss(Y_va, forward(unflatten(pop.best_position, topology), X_va), mode)
        val_losses[it] = cache[key]

    bounds = fox.SearchBounds(cfg.weight_low, cfg.weight_high, weight_count(topology))
    result = fox.optimize(objective, bounds, cfg.fox_params(), seed=cfg.seed,
                          n_jobs=cfg.n_jobs, callback=record)
    trace = EpochTrace(result.fitness_history.copy(), val_losses)
    model = TrainedModel(
        kind="foxann",
        topology=topology,
        weights=result.best_position,
        train_loss=float(trace.train_loss[-1]),
        val_loss=float(trace.val_loss[-1]),
    )
    return model, trace


def _output_deltas(out, y):
    # (y - y') * f'(z), with f' expressed through the sigmoid output
    return (y - out) * out * (1.0 - out)


def backprop_gradient(network: Network, features, targets):
    """Gradient of ``0.5 * sum((y - y')**2)`` with respect to every parameter.

    Returned in the flat layout of :func:`foxann.mlp.flatten`, summed over the
    rows of ``features``.
    """
    X = np.atleast_2d(np.asarray(features, dtype=float))
    Y = np.atleast_2d(np.asarray(targets, dtype=float))
    acts = forward(network, X, return_activations=True)
    delta = _output_deltas(acts[-1], Y)
    grads_W, grads_b = [], []
    for l in range(len(network.weights) - 1, -1, -1):
        a_prev = acts[l]
        grads_W.append(-(a_prev.T @ delta))
        grads_b.append(-delta.sum(axis=0))
        if l > 0:
            delta = (delta @ network.weights[l].T) * a_prev * (1.0 - a_prev)
    parts = []
    for gW, gb in zip(reversed(grads_W), reversed(grads_b)):
        parts.append(gW.ravel())
        parts.append(gb)
    return np.concatenate(parts)


def train_backprop(train: Split, val: Split, topology: Topology, cfg: TrainConfig = TrainConfig()):
    """Online delta-rule training, one seeded shuffled pass per epoch."""
    topology = topology if isinstance(topology, Topology) else Topology(topology)
    _check_splits(train, val, topology.n_inputs, topology.n_outputs)
    rng = np.random.default_rng(cfg.seed)
    w0 = rng.uniform(cfg.weight_low, cfg.weight_high, weight_count(topology))
    net = unflatten(w0, topology)
    Ws = [W for W in net.weights]  # updated in place
    bs = [b for b in net.biases]
    eta = cfg.learning_rate
    X_tr, Y_tr = train.features, train.targets
    X_va, Y_va = val.features, val.targets
    n_layers = len(Ws)
    tr_hist = np.empty(cfg.epochs)
    va_hist = np.empty(cfg.epochs)

    for epoch in range(cfg.epochs):
        for idx in rng.permutation(len(X_tr)):
            acts = [X_tr[idx]]
            for W, b in zip(Ws, bs):
                acts.append(expit(acts[-1] @ W + b))
            delta = _output_deltas(acts[-1], Y_tr[idx])
            for l in range(n_layers - 1, -1, -1):
                a_prev = acts[l]
                back = (Ws[l] @ delta) * a_prev * (1.0 - a_prev) if l > 0 else None
                Ws[l] += eta * np.outer(a_prev, delta)
                bs[l] += eta * delta
                delta = back
        tr_hist[epoch] = loss(Y_tr, forward(net, X_tr), cfg.loss_mode)
        va_hist[epoch] = loss(Y_va, forward(net, X_va), cfg.loss_mode)
        if not (math.isfinite(tr_hist[epoch]) and math.isfinite(va_hist[epoch])):
            raise FloatingPointError(f"backprop loss became non-finite at epoch {epoch + 1}")

    model = TrainedModel(
        kind="ann_backprop",
        topology=topology,
        weights=flatten(net),
        train_loss=float(tr_hist[-1]),
        val_loss=float(va_hist[-1]),
    )
    return model, EpochTrace(tr_hist, va_hist)


def train_logreg(train: Split, val: Split, n_classes: int, cfg: TrainConfig = TrainConfig()):
    """Multinomial logistic regression by full-batch gradient descent.

    Minimizes the mean cross-entropy starting from zero weights; the trace
    reports the squared error of the predicted probabilities so it is
    comparable with the network traces.
    """
    if n_classes < 2:
        raise ValueError(f"n_classes must be >= 2, got {n_classes}")
    n_features = train.features.shape[1]
    topology = Topology([n_features, n_classes])
    _check_splits(train, val, n_features, n_classes)
    X_tr, Y_tr = train.features, train.targets
    X_va, Y_va = val.features, val.targets
    W = np.zeros((n_features, n_classes))
    b = np.zeros(n_classes)
    n = len(X_tr)
    tr_hist = np.empty(cfg.epochs)
    va_hist = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        G = _softmax(X_tr @ W + b) - Y_tr
        W -= cfg.learning_rate * (X_tr.T @ G) / n
        b -= cfg.learning_rate * G.sum(axis=0) / n
        tr_hist[epoch] = loss(Y_tr, _softmax(X_tr @ W + b), cfg.loss_mode)
        va_hist[epoch] = loss(Y_va, _softmax(X_va @ W + b), cfg.loss_mode)
    model = TrainedModel(
        kind="logreg",
        topology=topology,
        weights=np.concatenate([W.ravel(), b]),
        train_loss=float(tr_hist[-1]),
        val_loss=float(va_hist[-1]),
    )
    return model, EpochTrace(tr_hist, va_hist)
