"""Mean-field Gaussian BNN trained by the reparameterization trick.

Every weight w has a variational posterior N(mu, softplus(rho)^2) and the
prior N(0, sigma^2).  The loss is the Monte Carlo estimate of the expected
MSE plus ``kl_weight`` times the closed-form KL divergence.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np
from scipy.special import expit

from ..datagen import Split
from ..errors import ConfigError
from .mlp import Activation, MlpParams, NetSpec, backward, forward, init_mlp, predict
from .training import TrainConfig, _mse, fit_arrays, seed_streams, spread, target_affine

# rho giving an initial posterior std of about 2.5e-3
RHO_INIT = -6.0
# softplus(-1000) underflows to exactly 0: a point-mass posterior
RHO_ZERO_VARIANCE = -1000.0


def softplus(x):
    return np.logaddexp(0.0, x)


@dataclass
class BnnParams:
    """Posterior means and raw scales per layer; ``prior_std`` is sigma."""

    mu_w: List[np.ndarray]
    rho_w: List[np.ndarray]
    mu_b: List[np.ndarray]
    rho_b: List[np.ndarray]
    prior_std: float = 0.1
    activation: Activation = Activation.RELU
    out_shift: float = 0.0
    out_scale: float = 1.0

    def __post_init__(self):
        self.activation = Activation(self.activation)
        if not self.prior_std > 0:
            raise ConfigError("prior_std must be positive")
        for mu, rho in zip(self.mu_w + self.mu_b, self.rho_w + self.rho_b):
            if mu.shape != rho.shape:
                raise ConfigError("mu and rho shapes differ")
        self.mean_network()  # shape validation

    @classmethod
    def from_mlp(cls, p: MlpParams, prior_std=0.1, rho=RHO_INIT) -> "BnnParams":
        return cls([w.copy() for w in p.weights], [np.full(w.shape, float(rho)) for w in p.weights],
                   [b.copy() for b in p.biases], [np.full(b.shape, float(rho)) for b in p.biases],
                   prior_std, p.activation, p.out_shift, p.out_scale)

    def arrays(self) -> List[np.ndarray]:
        out = []
        for mw, rw, mb, rb in zip(self.mu_w, self.rho_w, self.mu_b, self.rho_b):
            out += [mw, rw, mb, rb]
        return out

    def with_arrays(self, arrays) -> "BnnParams":
        return replace(self, mu_w=list(arrays[0::4]), rho_w=list(arrays[1::4]),
                       mu_b=list(arrays[2::4]), rho_b=list(arrays[3::4]))

    def mean_network(self) -> MlpParams:
        return MlpParams(list(self.mu_w), list(self.mu_b), self.activation,
                         self.out_shift, self.out_scale)

    def sample(self, rng):
        """One weight draw; returns ``(network, eps_w, eps_b)``."""
        eps_w = [rng.standard_normal(m.shape) for m in self.mu_w]
        eps_b = [rng.standard_normal(m.shape) for m in self.mu_b]
        ws = [m + softplus(r) * e for m, r, e in zip(self.mu_w, self.rho_w, eps_w)]
        bs = [m + softplus(r) * e for m, r, e in zip(self.mu_b, self.rho_b, eps_b)]
        net = MlpParams(ws, bs, self.activation, self.out_shift, self.out_scale)
        return net, eps_w, eps_b

    def n_params(self) -> int:
        return sum(a.size for a in self.arrays())


def kl_divergence(p: BnnParams) -> float:
    """KL(q || N(0, sigma^2)) summed over every weight and bias."""
    s2 = p.prior_std ** 2
    total = 0.0
    for mu, rho in zip(p.mu_w + p.mu_b, p.rho_w + p.rho_b):
        std = softplus(rho)
        total += float(np.sum(np.log(p.prior_std / std) + (std ** 2 + mu ** 2) / (2 * s2) - 0.5))
    return total


def _kl_grads(p: BnnParams):
    """d KL / d mu and d KL / d rho for each array in :meth:`arrays` order."""
    s2 = p.prior_std ** 2
    out = []
    for mw, rw, mb, rb in zip(p.mu_w, p.rho_w, p.mu_b, p.rho_b):
        for mu, rho in ((mw, rw), (mb, rb)):
            std = softplus(rho)
            out += [mu / s2, (-1.0 / std + std / s2) * expit(rho)]
    return out


def bnn_elbo(p: BnnParams, x, y, kl_weight: float, mc_samples: int = 4, rng=None):
    """Negative ELBO (up to constants) and its reparameterized gradients.

    ``y`` is compared with the raw network output, as in ``mlp.backward``.
    Returns ``(loss, grads, parts)`` where ``parts`` holds the expected MSE
    and the KL term separately.  ``kl_weight == 0`` skips the KL entirely, so
    point-mass posteriors (std = 0) are allowed in that case.
    """
    if mc_samples < 1:
        raise ConfigError("mc_samples must be >= 1")
    if kl_weight < 0:
        raise ConfigError("kl_weight must be >= 0")
    rng = np.random.default_rng(0) if rng is None else rng
    grads = [np.zeros_like(a) for a in p.arrays()]
    mse = 0.0
    for _ in range(mc_samples):
        net, eps_w, eps_b = p.sample(rng)
        loss_s, g = backward(net, x, y)
        mse += loss_s
        for layer in range(len(p.mu_w)):
            gw, gb = g[2 * layer], g[2 * layer + 1]
            grads[4 * layer] += gw
            grads[4 * layer + 1] += gw * eps_w[layer] * expit(p.rho_w[layer])
            grads[4 * layer + 2] += gb
            grads[4 * layer + 3] += gb * eps_b[layer] * expit(p.rho_b[layer])
    grads = [g / mc_samples for g in grads]
    mse /= mc_samples
    kl = 0.0
    if kl_weight > 0:
        kl = kl_divergence(p)
        grads = [g + kl_weight * k for g, k in zip(grads, _kl_grads(p))]
    return mse + kl_weight * kl, grads, {"mse": mse, "kl": kl}


def train_bnn(split: Split, spec: NetSpec, cfg: TrainConfig = TrainConfig(),
              prior_std: float = 0.1, init: Optional[BnnParams] = None,
              rho_init: float = RHO_INIT):
    """Fit a BNN; returns ``(params, loss_curve)``.

    Posterior means start from the same draw ``train_mlp`` would use for the
    seed, so the two trainers share initialisation.  The loss curve tracks the
    MSE of the posterior-mean network.
    """
    if not prior_std > 0:
        raise ConfigError("prior_std must be positive")
    tr, te = split.train, split.test
    if tr.n_features != spec.input_dim:
        raise ConfigError(f"NetSpec.input_dim={spec.input_dim} but data has {tr.n_features} features")
    init_rng, order_rng, noise_rng = seed_streams(cfg.seed)
    shift, scale = target_affine(tr.targets, cfg.standardize_targets)
    if init is None:
        init = BnnParams.from_mlp(init_mlp(spec, init_rng), prior_std, rho_init)
    base = replace(init, prior_std=prior_std, out_shift=shift, out_scale=scale)
    y_scaled = (tr.targets - shift) / scale
    kl_weight = cfg.kl_weight if cfg.kl_weight is not None else 1.0 / len(tr)

    def loss_and_grad(arrays, xb, yb):
        loss, grads, _ = bnn_elbo(base.with_arrays(arrays), xb, yb, kl_weight,
                                  cfg.mc_train_samples, noise_rng)
        return loss, grads

    def evaluate(arrays):
        net = base.with_arrays(arrays).mean_network()
        return _mse(predict(net, tr.features), tr.targets), _mse(predict(net, te.features), te.targets)

    arrays, curve = fit_arrays(base.arrays(), loss_and_grad, tr.features, y_scaled, cfg,
                               order_rng, evaluate)
    return base.with_arrays(arrays), curve


def predict_bnn(p: BnnParams, x, n_samples: int = 100, seed: int = 0):
    """Monte Carlo mean and population std over ``n_samples`` weight draws."""
    if n_samples < 2:
        raise ConfigError("n_samples must be >= 2")
    rng = np.random.default_rng([int(seed), 3])
    return spread([forward(p.sample(rng)[0], x)[0] for _ in range(n_samples)])
