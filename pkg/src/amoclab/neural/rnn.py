"""Elman (tanh) recurrent regressor over an autoregressive window.

Each row of an AR dataset is read as a scalar sequence x_1..x_w:

    h_t = tanh(x_t * w_in + h_{t-1} @ w_rec + b),   h_0 = 0
    y   = h_w @ w_out + b_out
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np

from ..datagen import Mode, Split
from ..errors import ConfigError
from .training import TrainConfig, _mse, fit_arrays, seed_streams, target_affine


@dataclass
class RnnParams:
    w_in: np.ndarray   # (H,)
    w_rec: np.ndarray  # (H, H)
    b: np.ndarray      # (H,)
    w_out: np.ndarray  # (H,)
    b_out: np.ndarray  # (1,)
    out_shift: float = 0.0
    out_scale: float = 1.0

    def __post_init__(self):
        h = self.hidden_dim
        if (self.w_rec.shape != (h, h) or self.b.shape != (h,) or self.w_out.shape != (h,)
                or self.b_out.shape != (1,)):
            raise ConfigError("inconsistent recurrent weight shapes")

    @property
    def hidden_dim(self) -> int:
        return self.w_in.shape[0]

    def arrays(self) -> List[np.ndarray]:
        return [self.w_in, self.w_rec, self.b, self.w_out, self.b_out]

    def with_arrays(self, arrays) -> "RnnParams":
        w_in, w_rec, b, w_out, b_out = arrays
        return replace(self, w_in=w_in, w_rec=w_rec, b=b, w_out=w_out, b_out=b_out)

    def n_params(self) -> int:
        return sum(a.size for a in self.arrays())


def init_rnn(hidden_dim: int = 32, rng=None) -> RnnParams:
    if hidden_dim < 1:
        raise ConfigError("hidden_dim must be >= 1")
    rng = np.random.default_rng(0) if rng is None else rng
    h = hidden_dim
    return RnnParams(
        w_in=rng.normal(0.0, 1.0, h),
        w_rec=rng.normal(0.0, 0.5 / np.sqrt(h), (h, h)),
        b=np.zeros(h),
        w_out=rng.normal(0.0, 1.0 / np.sqrt(h), h),
        b_out=np.zeros(1),
    )


def _as_batch(x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] < 1:
        raise ConfigError(f"expected (n, window) inputs, got shape {np.shape(x)}")
    return x, single


def rnn_forward(p: RnnParams, x):
    """Returns ``(y_hat, hs)``; ``hs[t]`` is the hidden state after step t (hs[0] = 0)."""
    x, single = _as_batch(x)
    n, w = x.shape
    hs = [np.zeros((n, p.hidden_dim))]
    for t in range(w):
        hs.append(np.tanh(x[:, t:t + 1] * p.w_in + hs[-1] @ p.w_rec + p.b))
    raw = hs[-1] @ p.w_out + p.b_out[0]
    y = p.out_shift + p.out_scale * raw
    return (float(y[0]) if single else y), hs


def predict_rnn(p: RnnParams, x):
    return rnn_forward(p, x)[0]


def rnn_backward(p: RnnParams, x, y):
    """MSE on the raw readout and its gradients by backprop through the window."""
    x, _ = _as_batch(x)
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(y) != len(x) or len(y) == 0:
        raise ConfigError("batch must be non-empty with one target per row")
    _, hs = rnn_forward(replace(p, out_shift=0.0, out_scale=1.0), x)
    raw = hs[-1] @ p.w_out + p.b_out[0]
    resid = raw - y
    loss = float(np.mean(resid ** 2))
    d_out = (2.0 / len(y)) * resid
    g_w_out = hs[-1].T @ d_out
    g_b_out = np.array([d_out.sum()])
    g_w_in = np.zeros_like(p.w_in)
    g_w_rec = np.zeros_like(p.w_rec)
    g_b = np.zeros_like(p.b)
    dh = d_out[:, None] * p.w_out[None, :]
    for t in range(x.shape[1], 0, -1):
        dz = dh * (1.0 - hs[t] ** 2)
        g_w_in += x[:, t - 1] @ dz
        g_w_rec += hs[t - 1].T @ dz
        g_b += dz.sum(axis=0)
        dh = dz @ p.w_rec.T
    return loss, [g_w_in, g_w_rec, g_b, g_w_out, g_b_out]


def train_rnn(split: Split, hidden_dim: int = 32, cfg: TrainConfig = TrainConfig(),
              init: Optional[RnnParams] = None):
    """Fit the recurrent regressor on an AR split; returns ``(params, loss_curve)``."""
    tr, te = split.train, split.test
    if tr.mode is not Mode.AR:
        raise ConfigError("the recurrent network only supports AR datasets")
    init_rng, order_rng, _ = seed_streams(cfg.seed)
    shift, scale = target_affine(tr.targets, cfg.standardize_targets)
    base = init if init is not None else init_rnn(hidden_dim, init_rng)
    base = replace(base, out_shift=shift, out_scale=scale)
    y_scaled = (tr.targets - shift) / scale

    def loss_and_grad(arrays, xb, yb):
        return rnn_backward(base.with_arrays(arrays), xb, yb)

    def evaluate(arrays):
        p = base.with_arrays(arrays)
        return _mse(predict_rnn(p, tr.features), tr.targets), _mse(predict_rnn(p, te.features), te.targets)

    arrays, curve = fit_arrays(base.arrays(), loss_and_grad, tr.features, y_scaled, cfg,
                               order_rng, evaluate)
    return base.with_arrays(arrays), curve
