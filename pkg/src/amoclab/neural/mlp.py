"""Feedforward regressor with manual forward/backward passes."""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Sequence

import numpy as np

from ..errors import ConfigError


class Activation(str, Enum):
    RELU = "relu"
    TANH = "tanh"


def activate(z, act: Activation):
    if act is Activation.RELU:
        return np.maximum(z, 0.0)
    return np.tanh(z)


def activation_grad(z, a, act: Activation):
    """Derivative at pre-activation ``z`` given the post-activation ``a``."""
    if act is Activation.RELU:
        return (z > 0).astype(float)
    return 1.0 - a * a


@dataclass(frozen=True)
class NetSpec:
    input_dim: int
    hidden_layers: tuple = (64, 64)
    activation: Activation = Activation.RELU
    seed: int = 0
    output_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "activation", Activation(self.activation))
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        if self.input_dim < 1:
            raise ConfigError("input_dim must be >= 1")
        if any(w < 1 for w in self.hidden_layers):
            raise ConfigError("hidden widths must be >= 1")
        if self.output_dim != 1:
            raise ConfigError("only scalar regression (output_dim = 1) is supported")

    @property
    def sizes(self) -> tuple:
        return (self.input_dim, *self.hidden_layers, 1)


@dataclass
class MlpParams:
    """Weights ``W[l]`` of shape (fan_in, fan_out) and biases ``b[l]``.

    The network output is ``out_shift + out_scale * net(x)``; training uses
    the affine pair to work on standardized targets.
    """

    weights: List[np.ndarray]
    biases: List[np.ndarray]
    activation: Activation = Activation.RELU
    out_shift: float = 0.0
    out_scale: float = 1.0

    def __post_init__(self):
        self.activation = Activation(self.activation)
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ConfigError("need one bias per weight matrix")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ConfigError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ConfigError(f"layer {i} does not chain onto layer {i - 1}")
        if self.weights[-1].shape[1] != 1:
            raise ConfigError("the last layer must have a single output")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    def arrays(self) -> List[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> "MlpParams":
        return replace(self, weights=list(arrays[0::2]), biases=list(arrays[1::2]))

    def n_params(self) -> int:
        return sum(a.size for a in self.arrays())


def init_mlp(spec: NetSpec, rng=None) -> MlpParams:
    """He (ReLU) or Glorot (Tanh) normal initialisation, zero biases."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    weights, biases = [], []
    sizes = spec.sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        if spec.activation is Activation.RELU:
            scale = np.sqrt(2.0 / fan_in)
        else:
            scale = np.sqrt(2.0 / (fan_in + fan_out))
        weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases, spec.activation)


def _as_batch(x, input_dim):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != input_dim:
        raise ConfigError(f"expected inputs with {input_dim} features, got shape {np.shape(x)}")
    return x, single


def forward(p: MlpParams, x):
    """Evaluate the network.

    Returns ``(y_hat, cache)``.  ``cache`` is a list of ``(z, a)`` pairs, one
    per layer, with the input as ``(None, x)`` in front; the last entry holds
    the raw (unshifted) output.  A 1-D ``x`` gives a scalar ``y_hat``.
    """
    a, single = _as_batch(x, p.input_dim)
    cache = [(None, a)]
    last = len(p.weights) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = a @ w + b
        a = z if i == last else activate(z, p.activation)
        cache.append((z, a))
    y = p.out_shift + p.out_scale * a[:, 0]
    return (float(y[0]) if single else y), cache


def predict(p: MlpParams, x):
    return forward(p, x)[0]


def backward(p: MlpParams, x, y, cache=None):
    """Gradients of the mean squared error w.r.t. every weight and bias.

    The loss is measured on the raw network output against ``y`` (so pass
    standardized targets when ``out_scale`` is not 1).  Returns
    ``(loss, grads)`` with ``grads`` ordered like :meth:`MlpParams.arrays`.
    """
    x, _ = _as_batch(x, p.input_dim)
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(y) != len(x) or len(y) == 0:
        raise ConfigError("batch must be non-empty with one target per row")
    if cache is None:
        _, cache = forward(p, x)
    out = cache[-1][1][:, 0]
    resid = out - y
    loss = float(np.mean(resid ** 2))
    delta = (2.0 / len(y)) * resid[:, None]
    return loss, backprop(p, cache, delta)


def backprop(p: MlpParams, cache, delta):
    """Push d(loss)/d(raw output) back through the layers."""
    grads = [None] * (2 * len(p.weights))
    for i in range(len(p.weights) - 1, -1, -1):
        a_prev = cache[i][1]
        grads[2 * i] = a_prev.T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            z, a = cache[i]
            delta = (delta @ p.weights[i].T) * activation_grad(z, a, p.activation)
    return grads

