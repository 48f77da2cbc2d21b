"""scikit-learn compatible wrappers around the trainers.

These compose with ``Pipeline``, ``cross_val_score``, ``clone`` and friends::

    from sklearn.pipeline import make_pipeline
    clf = make_pipeline(MinMaxNormalizer(), FOXANNClassifier(random_state=0))
    clf.fit(X, y).score(X, y)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.preprocessing import LabelEncoder
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Split, apply_scaler, fit_scaler
from .mlp import Topology, build_topology
from .trainers import TrainConfig, train_backprop, train_foxann, train_logreg

__all__ = [
    "MinMaxNormalizer",
    "FOXANNClassifier",
    "BackpropMLPClassifier",
    "GDLogisticRegression",
]


class MinMaxNormalizer(TransformerMixin, BaseEstimator):
    """Per-feature min-max scaling to [0, 1]; constant features map to 0."""

    def fit(self, X, y=None):
        X = check_array(X)
        self.scaler_ = fit_scaler(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scaler_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return apply_scaler(self.scaler_, X)


class _TrainerClassifier(ClassifierMixin, BaseEstimator):
    # subclasses implement _train(train_split, val_split, cfg)

    def _config(self) -> TrainConfig:
        raise NotImplementedError

    def fit(self, X, y, X_val=None, y_val=None):
        """Fit on ``(X, y)``.

        The per-epoch validation loss in ``trace_`` is measured on
        ``(X_val, y_val)`` when given, otherwise on the training data.
        """
        X, y = check_X_y(X, y)
        self._encoder = LabelEncoder().fit(y)
        self.classes_ = self._encoder.classes_
        if len(self.classes_) < 2:
            raise ValueError("need at least 2 classes to fit a classifier")
        self.n_features_in_ = X.shape[1]
        n_classes = len(self.classes_)
        train = Split(X, self._encoder.transform(y), n_classes)
        if X_val is None:
            val = train
        else:
            X_val, y_val = check_X_y(X_val, y_val)
            val = Split(X_val, self._encoder.transform(y_val), n_classes)
        self.model_, self.trace_ = self._train(train, val, self._config())
        return self

    def predict_proba(self, X):
        """Network outputs per class.

        For the sigmoid networks these are independent per-class scores in
        (0, 1); they are not normalized to sum to one.
        """
        check_is_fitted(self, "model_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return self.model_.predict_proba(X)

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class FOXANNClassifier(_TrainerClassifier):
    """Sigmoid MLP whose weights are found by the FOX optimizer.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int, optional
        Defaults to ``(2 * n_features, max(1, n_features // 2))``.
    epochs : int
        FOX iterations.
    population_size : int
        Number of FOX agents.
    weight_bounds : (float, float)
        Search box for every weight and bias.
    a_schedule : {"decreasing", "literal_eq10"}
    exploration : {"scaled", "walk"}
    random_state : int
    n_jobs : int, optional
        Threads used to evaluate the population. Does not change results.
    """

    def __init__(self, hidden_layer_sizes=None, epochs=100, population_size=30,
                 weight_bounds=(-3.0, 3.0), a_schedule="decreasing", exploration="scaled",
                 random_state=0, n_jobs=None):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.epochs = epochs
        self.population_size = population_size
        self.weight_bounds = weight_bounds
        self.a_schedule = a_schedule
        self.exploration = exploration
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self):
        lo, hi = self.weight_bounds
        return TrainConfig(epochs=self.epochs, weight_low=lo, weight_high=hi,
                           population_size=self.population_size, seed=self.random_state,
                           a_schedule=self.a_schedule, exploration=self.exploration,
                           n_jobs=self.n_jobs)

    def _topology(self, n_classes):
        if self.hidden_layer_sizes is None:
            return build_topology(self.n_features_in_, n_classes)
        return Topology([self.n_features_in_, *self.hidden_layer_sizes, n_classes])

    def _train(self, train, val, cfg):
        self.topology_ = self._topology(train.n_classes)
        return train_foxann(train, val, self.topology_, cfg)


class BackpropMLPClassifier(FOXANNClassifier):
    """The same network trained by online backpropagation."""

    def __init__(self, hidden_layer_sizes=None, epochs=100, learning_rate=0.1,
                 weight_bounds=(-3.0, 3.0), random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.weight_bounds = weight_bounds
        self.random_state = random_state

    def _config(self):
        lo, hi = self.weight_bounds
        return TrainConfig(epochs=self.epochs, weight_low=lo, weight_high=hi,
                           learning_rate=self.learning_rate, seed=self.random_state)

    def _train(self, train, val, cfg):
        self.topology_ = self._topology(train.n_classes)
        return train_backprop(train, val, self.topology_, cfg)


class GDLogisticRegression(_TrainerClassifier):
    """Softmax regression fitted by full-batch gradient descent."""

    def __init__(self, epochs=100, learning_rate=0.1, random_state=0):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.random_state = random_state

    def _config(self):
        return TrainConfig(epochs=self.epochs, learning_rate=self.learning_rate,
                           seed=self.random_state)

    def _train(self, train, val, cfg):
        return train_logreg(train, val, train.n_classes, cfg)
