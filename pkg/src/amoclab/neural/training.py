"""Training loops for the MLP and the Deep Ensemble.

Every trainer is a pure function of (split, spec, config): the seed fans out
into independent streams for initialisation (0), minibatch order (1) and, for
the BNN, weight noise (2).  Targets are standardized internally on the train
split; the fitted model carries the inverse map in ``out_shift``/``out_scale``
so that its predictions come back in the original units of q.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, List, Optional

import numpy as np

from ..datagen import Split
from ..errors import ConfigError, TrainingError
from .mlp import MlpParams, NetSpec, backward, init_mlp, predict
from .optim import AdamConfig, AdamState, adam_step


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 120
    lr: float = 3e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32  # 0 means full batch
    seed: int = 0
    mc_train_samples: int = 4
    kl_weight: Optional[float] = None  # None -> 1 / n_train
    standardize_targets: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not self.lr > 0:
            raise ConfigError("lr must be positive")
        if self.batch_size < 0:
            raise ConfigError("batch_size must be >= 0")
        if self.mc_train_samples < 1:
            raise ConfigError("mc_train_samples must be >= 1")

    @property
    def adam(self) -> AdamConfig:
        return AdamConfig(self.lr, self.beta1, self.beta2, self.eps)


def seed_streams(seed: int):
    """Independent generators for init, data order and weight noise."""
    return tuple(np.random.default_rng([int(seed), k]) for k in range(3))


def target_affine(y, enabled=True):
    if not enabled:
        return 0.0, 1.0
    shift = float(np.mean(y))
    scale = float(np.std(y))
    return shift, (scale if scale > 0 else 1.0)


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    size = n if batch_size in (0, None) or batch_size >= n else batch_size
    for start in range(0, n, size):
        yield order[start:start + size]


@dataclass
class LossCurve:
    train_mse: List[float]
    test_mse: List[float]

    def __len__(self):
        return len(self.train_mse)

    def to_dict(self):
        return {"train_mse": list(self.train_mse), "test_mse": list(self.test_mse)}


def fit_arrays(arrays, loss_and_grad: Callable, x, y_scaled, cfg: TrainConfig,
               order_rng, evaluate: Callable) -> tuple:
    """Minibatch Adam over ``cfg.epochs`` epochs.

    ``loss_and_grad(arrays, xb, yb)`` returns ``(loss, grads)``;
    ``evaluate(arrays)`` returns ``(train_mse, test_mse)`` in target units and
    is called once per epoch.  Raises :class:`TrainingError` on divergence.
    """
    state = AdamState.zeros_like(arrays)
    curve = LossCurve([], [])
    n = len(y_scaled)
    for epoch in range(cfg.epochs):
        for idx in _batches(n, cfg.batch_size, order_rng):
            loss, grads = loss_and_grad(arrays, x[idx], y_scaled[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss in epoch {epoch}", epoch=epoch)
            arrays, state = adam_step(arrays, grads, state, cfg.adam)
        tr, te = evaluate(arrays)
        if not (np.isfinite(tr) and np.isfinite(te)):
            raise TrainingError(f"non-finite loss in epoch {epoch}", epoch=epoch)
        curve.train_mse.append(tr)
        curve.test_mse.append(te)
    return arrays, curve


def _mse(a, b):
    return float(np.mean((np.asarray(a) - np.asarray(b)) ** 2))


def train_mlp(split: Split, spec: NetSpec, cfg: TrainConfig = TrainConfig(),
              init: Optional[MlpParams] = None):
    """Fit an MLP on a (standardized) split; returns ``(params, loss_curve)``."""
    tr, te = split.train, split.test
    if tr.n_features != spec.input_dim:
        raise ConfigError(f"NetSpec.input_dim={spec.input_dim} but data has {tr.n_features} features")
    init_rng, order_rng, _ = seed_streams(cfg.seed)
    shift, scale = target_affine(tr.targets, cfg.standardize_targets)
    base = init if init is not None else init_mlp(spec, init_rng)
    base = replace(base, out_shift=shift, out_scale=scale)
    y_scaled = (tr.targets - shift) / scale

    def loss_and_grad(arrays, xb, yb):
        return backward(base.with_arrays(arrays), xb, yb)

    def evaluate(arrays):
        p = base.with_arrays(arrays)
        return _mse(predict(p, tr.features), tr.targets), _mse(predict(p, te.features), te.targets)

    arrays, curve = fit_arrays(base.arrays(), loss_and_grad, tr.features, y_scaled, cfg,
                               order_rng, evaluate)
    return base.with_arrays(arrays), curve


@dataclass
class Ensemble:
    members: List[MlpParams]
    spec: Optional[NetSpec] = None

    def __post_init__(self):
        if not self.members:
            raise ConfigError("an ensemble needs at least one member")
        shapes = [tuple(a.shape for a in m.arrays()) for m in self.members]
        if any(s != shapes[0] for s in shapes):
            raise ConfigError("ensemble members must share one architecture")

    @property
    def size(self) -> int:
        return len(self.members)


def train_ensemble(split: Split, spec: NetSpec, cfg: TrainConfig = TrainConfig(), m: int = 10):
    """Train ``m`` members with seeds ``cfg.seed + 0 .. cfg.seed + m - 1``.

    Returns ``(ensemble, curves)``.
    """
    if m < 1:
        raise ConfigError("ensemble size must be >= 1")
    members, curves = [], []
    for i in range(m):
        params, curve = train_mlp(split, spec, replace(cfg, seed=cfg.seed + i))
        members.append(params)
        curves.append(curve)
    return Ensemble(members, spec), curves


def spread(draws):
    """Mean and population std over axis 0, taken about the first draw.

    Identical draws give that draw back exactly and a std of exactly 0.
    """
    draws = np.asarray(draws, dtype=float)
    dev = draws - draws[0]
    return draws[0] + dev.mean(axis=0), dev.std(axis=0)


def predict_ensemble(e: Ensemble, x):
    """Member mean and population standard deviation."""
    return spread([predict(p, x) for p in e.members])
