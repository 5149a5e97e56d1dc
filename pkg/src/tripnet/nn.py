"""Dense layers, forward pass with cached intermediates, and backpropagation.

Layout is batch-major: a batch is ``n_samples x n_features`` and a layer maps
it through ``X @ W + b`` followed by an elementwise activation.
"""
from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from .errors import ArgumentError, ShapeError
from .numerics import add_row_broadcast, matmul


class Activation(str, Enum):
    RELU = "relu"
    TANH = "tanh"
    IDENTITY = "identity"

    @property
    def code(self):
        """Integer tag used by the compiled kernels."""
        return _ACTIVATION_CODES[self]


_ACTIVATION_CODES = {Activation.IDENTITY: 0, Activation.RELU: 1, Activation.TANH: 2}


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DenseLayer:
    weights: np.ndarray  # fan_in x fan_out
    bias: np.ndarray     # 1 x fan_out
    activation: Activation

    def __post_init__(self):
        w, b = self.weights, self.bias
        if w.ndim != 2 or b.ndim != 2 or b.shape[0] != 1 or b.shape[1] != w.shape[1]:
            raise ShapeError(f"inconsistent layer: weights {w.shape}, bias {b.shape}")
        if w.shape[0] < 1 or w.shape[1] < 1:
            raise ShapeError(f"layer needs fan_in, fan_out >= 1, got {w.shape}")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "bias", _frozen(b))
        object.__setattr__(self, "activation", Activation(self.activation))

    @property
    def fan_in(self):
        return self.weights.shape[0]

    @property
    def fan_out(self):
        return self.weights.shape[1]

    @property
    def param_count(self):
        return self.fan_in * self.fan_out + self.fan_out

    @classmethod
    def zeros(cls, fan_in, fan_out, activation):
        return cls(np.zeros((fan_in, fan_out)), np.zeros((1, fan_out)), activation)


@dataclass(frozen=True)
class Network:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ArgumentError("a network needs at least one layer")
        for i, (a, b) in enumerate(zip(layers, layers[1:])):
            if a.fan_out != b.fan_in:
                raise ShapeError(f"layer {i} outputs {a.fan_out} values but layer {i + 1} "
                                 f"expects {b.fan_in}")
        object.__setattr__(self, "layers", layers)

    @property
    def dims(self):
        return [self.layers[0].fan_in] + [layer.fan_out for layer in self.layers]

    @property
    def n_inputs(self):
        return self.layers[0].fan_in


@dataclass(frozen=True)
class ForwardCache:
    inputs: np.ndarray
    pre_activations: tuple   # Z_i per layer
    activations: tuple       # A_i per layer


@dataclass(frozen=True)
class Gradients:
    d_weights: tuple
    d_bias: tuple


def paper_architecture(n_features):
    """Dense(n->5, ReLU) -> Dense(5->5, tanh) -> Dense(5->1, linear).

    With the 16 survey features this is 85 + 30 + 6 = 121 parameters.
    Weights are zero placeholders; run :func:`init_network` before training.
    """
    if n_features < 1:
        raise ArgumentError(f"n_features must be >= 1, got {n_features}")
    return Network((
        DenseLayer.zeros(n_features, 5, Activation.RELU),
        DenseLayer.zeros(5, 5, Activation.TANH),
        DenseLayer.zeros(5, 1, Activation.IDENTITY),
    ))


def param_count(net):
    """Return ``(per_layer_counts, total)``."""
    counts = [layer.param_count for layer in net.layers]
    return counts, sum(counts)


def init_network(net, rng):
    """Glorot-uniform weights in (-s, s), s = sqrt(6 / (fan_in + fan_out)); zero biases."""
    layers = []
    for layer in net.layers:
        s = math.sqrt(6.0 / (layer.fan_in + layer.fan_out))
        w = np.array([[rng.uniform(-s, s) for _ in range(layer.fan_out)]
                      for _ in range(layer.fan_in)])
        layers.append(DenseLayer(w, np.zeros((1, layer.fan_out)), layer.activation))
    return Network(tuple(layers))


def activate(act, z):
    if act is Activation.RELU:
        return np.maximum(z, 0.0)
    if act is Activation.TANH:
        return np.tanh(z)
    return z.copy()


def activate_grad(act, z):
    # ReLU'(0) is taken as 0
    if act is Activation.RELU:
        return (z > 0.0).astype(np.float64)
    if act is Activation.TANH:
        t = np.tanh(z)
        return 1.0 - t * t
    return np.ones_like(z)


def forward(net, batch):
    if batch.ndim != 2 or batch.shape[1] != net.n_inputs:
        raise ShapeError(f"batch shape {batch.shape} does not match network input width "
                         f"{net.n_inputs}")
    a = batch
    zs, acts = [], []
    for layer in net.layers:
        z = add_row_broadcast(matmul(a, layer.weights), layer.bias)
        a = activate(layer.activation, z)
        zs.append(z)
        acts.append(a)
    return a, ForwardCache(batch, tuple(zs), tuple(acts))


def backward(net, cache, d_output):
    """Reverse-mode gradients of a scalar loss given dL/d(output)."""
    out = cache.activations[-1]
    if d_output.shape != out.shape:
        raise ShapeError(f"d_output shape {d_output.shape} != forward output shape {out.shape}")
    if len(cache.pre_activations) != len(net.layers):
        raise ShapeError(f"cache has {len(cache.pre_activations)} layers, network has "
                         f"{len(net.layers)}")
    d_ws = [None] * len(net.layers)
    d_bs = [None] * len(net.layers)
    d_a = d_output
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        d_z = d_a * activate_grad(layer.activation, cache.pre_activations[i])
        prev = cache.activations[i - 1] if i > 0 else cache.inputs
        d_ws[i] = prev.T @ d_z
        d_bs[i] = d_z.sum(axis=0, keepdims=True)
        if i > 0:
            d_a = d_z @ layer.weights.T
    return Gradients(tuple(d_ws), tuple(d_bs))


def predict(net, batch):
    return forward(net, batch)[0]


# Flat parameter layout shared with the kernels: for each layer, W row-major
# then b.

def flatten_params(net):
    parts = []
    for layer in net.layers:
        parts.append(layer.weights.ravel())
        parts.append(layer.bias.ravel())
    return np.concatenate(parts)


def flatten_grads(grads):
    parts = []
    for dw, db in zip(grads.d_weights, grads.d_bias):
        parts.append(np.ravel(dw))
        parts.append(np.ravel(db))
    return np.concatenate(parts)


def unflatten_params(theta, like):
    """Build a network with ``like``'s structure from flat parameters."""
    need = param_count(like)[1]
    if theta.ndim != 1 or theta.size != need:
        raise ShapeError(f"flat parameter vector has shape {theta.shape}, network needs {need}")
    layers = []
    pos = 0
    for layer in like.layers:
        fi, fo = layer.fan_in, layer.fan_out
        w = theta[pos:pos + fi * fo].reshape(fi, fo)
        pos += fi * fo
        b = theta[pos:pos + fo].reshape(1, fo)
        pos += fo
        layers.append(DenseLayer(w.copy(), b.copy(), layer.activation))
    return Network(tuple(layers))
