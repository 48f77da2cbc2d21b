"""Sigmoid feedforward networks and their flat parameter layout.

Flat layout, used for serialization and as the FOX search point: layer by
layer, each layer's weight matrix ``W`` of shape ``(n_in, n_out)`` in
row-major order (all weights leaving input 0, then input 1, ...), followed
by that layer's ``n_out`` biases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import expit

__all__ = [
    "Topology",
    "Network",
    "build_topology",
    "weight_count",
    "sigmoid",
    "flatten",
    "unflatten",
    "forward",
    "predict",
]


@dataclass(frozen=True)
class Topology:
    layer_sizes: Tuple[int, ...]

    def __init__(self, layer_sizes: Sequence[int]):
        sizes = tuple(int(s) for s in layer_sizes)
        if len(sizes) < 2:
            raise ValueError(f"a topology needs at least 2 layers, got {list(sizes)}")
        if any(s < 1 for s in sizes):
            raise ValueError(f"layer sizes must be >= 1, got {list(sizes)}")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    def layer_shapes(self) -> List[Tuple[int, int]]:
        return list(zip(self.layer_sizes[:-1], self.layer_sizes[1:]))

    def __len__(self):
        return len(self.layer_sizes)

    def __iter__(self):
        return iter(self.layer_sizes)


@dataclass(frozen=True)
class Network:
    """Per-layer weights ``W_l`` (in x out) and biases ``b_l`` (out)."""

    topology: Topology
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]

    def __post_init__(self):
        shapes = self.topology.layer_shapes()
        if len(self.weights) != len(shapes) or len(self.biases) != len(shapes):
            raise ValueError(f"expected {len(shapes)} layers")
        for l, ((n_in, n_out), W, b) in enumerate(zip(shapes, self.weights, self.biases)):
            if W.shape != (n_in, n_out) or b.shape != (n_out,):
                raise ValueError(
                    f"layer {l}: expected W{(n_in, n_out)} and b{(n_out,)}, "
                    f"got W{W.shape} and b{b.shape}"
                )


def build_topology(n_features: int, n_classes: int) -> Topology:
    """Two hidden layers: twice the inputs, then half the inputs (floor, min 1)."""
    if n_features < 1:
        raise ValueError(f"n_features must be >= 1, got {n_features}")
    if n_classes < 2:
        raise ValueError(f"classification needs n_classes >= 2, got {n_classes}")
    return Topology([n_features, 2 * n_features, max(1, n_features // 2), n_classes])


def weight_count(topology) -> int:
    if not isinstance(topology, Topology):
        topology = Topology(topology)
    return sum((n_in + 1) * n_out for n_in, n_out in topology.layer_shapes())


def sigmoid(x):
    """Logistic function, overflow-free for large ``|x|``."""
    out = expit(np.asarray(x, dtype=float))
    if out.ndim == 0:
        return float(out)
    return out


def unflatten(weights, topology) -> Network:
    if not isinstance(topology, Topology):
        topology = Topology(topology)
    w = np.asarray(weights, dtype=float)
    expected = weight_count(topology)
    if w.ndim != 1 or w.size != expected:
        raise ValueError(
            f"weight vector length mismatch for topology {list(topology.layer_sizes)}: "
            f"expected {expected}, got {w.size}"
        )
    Ws, bs = [], []
    i = 0
    for n_in, n_out in topology.layer_shapes():
        Ws.append(w[i:i + n_in * n_out].reshape(n_in, n_out).copy())
        i += n_in * n_out
        bs.append(w[i:i + n_out].copy())
        i += n_out
    return Network(topology, tuple(Ws), tuple(bs))


def flatten(network: Network) -> np.ndarray:
    parts = []
    for W, b in zip(network.weights, network.biases):
        parts.append(W.ravel())
        parts.append(b)
    return np.concatenate(parts)


def forward(network: Network, inputs, return_activations: bool = False):
    """Propagate ``inputs`` (one sample or a batch of rows) through the network.

    With ``return_activations`` the list of every layer's output, input
    first, is returned instead of only the final output.
    """
    x = np.asarray(inputs, dtype=float)
    n_in = network.topology.n_inputs
    if x.shape[-1] != n_in:
        raise ValueError(f"expected {n_in} input features, got {x.shape[-1]}")
    acts = [x]
    for W, b in zip(network.weights, network.biases):
        x = sigmoid(x @ W + b)
        acts.append(x)
    return acts if return_activations else x


def predict(network: Network, inputs):
    """Index of the largest output; ties go to the lowest index."""
    return np.argmax(forward(network, inputs), axis=-1)
