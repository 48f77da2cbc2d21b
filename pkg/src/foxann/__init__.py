"""Feedforward networks trained by the FOX optimizer, with baselines and a CV harness."""

from .data import Dataset, fit_scaler, apply_scaler, load_csv, load_dataset, one_hot, stratified_k_fold
from .estimators import (
    BackpropMLPClassifier,
    FOXANNClassifier,
    GDLogisticRegression,
    MinMaxNormalizer,
)
from .fox import FoxParams, SearchBounds, optimize
from .mlp import Topology, build_topology, weight_count
from .trainers import TrainConfig, TrainedModel, train_backprop, train_foxann, train_logreg

__version__ = "0.1.0"
