"""DeepLIFT (Rescale rule) and Shapley-value attributions for trained regressors.

Both methods explain f(x) - f(x0) relative to a reference input x0 and are
complete: the scores of one sample sum to that difference.  Ensembles are
attributed as the mean over members (Shapley values are linear in the model,
so the ensemble-mean function gives the same result); a BNN is attributed
through its posterior-mean network.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .datagen import Dataset, Mode, sidecar_path
from .errors import AttributionError, ConfigError
from .neural.bnn import BnnParams
from .neural.mlp import Activation, MlpParams, forward
from .neural.rnn import RnnParams, rnn_forward
from .neural.training import Ensemble

MAX_EXACT_FEATURES = 12
# default switch between exact enumeration and permutation sampling
EXACT_THRESHOLD = 8


class BaselinePolicy(str, Enum):
    TRAIN_MEAN = "train_mean"
    ZEROS = "zeros"
    CUSTOM = "custom"


class AttrMethod(str, Enum):
    DEEPLIFT = "deeplift"
    SHAPLEY_EXACT = "shapley_exact"
    SHAPLEY_SAMPLED = "shapley_sampled"
    SHAPLEY = "shapley"  # exact up to EXACT_THRESHOLD features, sampled beyond


@dataclass(frozen=True)
class Baseline:
    x0: np.ndarray
    policy: BaselinePolicy = BaselinePolicy.CUSTOM

    def __post_init__(self):
        object.__setattr__(self, "policy", BaselinePolicy(self.policy))
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if not np.all(np.isfinite(x0)):
            raise ConfigError("baseline must be finite")
        object.__setattr__(self, "x0", x0)


def make_baseline(policy, dim: Optional[int] = None, train_features=None, custom=None) -> Baseline:
    """Reference input for a policy.

    On standardized features the train mean is (numerically) the zero vector.
    """
    policy = BaselinePolicy(policy)
    if policy is BaselinePolicy.TRAIN_MEAN:
        if train_features is None:
            raise ConfigError("the train_mean baseline needs the training features")
        return Baseline(np.asarray(train_features, dtype=float).mean(axis=0), policy)
    if policy is BaselinePolicy.ZEROS:
        if dim is None:
            raise ConfigError("the zeros baseline needs the input dimension")
        return Baseline(np.zeros(int(dim)), policy)
    if custom is None:
        raise ConfigError("the custom baseline needs a reference vector")
    return Baseline(custom, policy)


@dataclass
class AttributionVector:
    scores: np.ndarray
    method: AttrMethod
    feature_names: tuple = ()

    def __post_init__(self):
        self.method = AttrMethod(self.method)
        self.scores = np.asarray(self.scores, dtype=float).reshape(-1)
        if self.feature_names and len(self.feature_names) != len(self.scores):
            raise ConfigError("feature_names does not match the score count")
        if not np.all(np.isfinite(self.scores)):
            raise AttributionError("non-finite attribution scores")

    def __len__(self):
        return len(self.scores)


# --------------------------------------------------------------------------
# model adapters
# --------------------------------------------------------------------------

def model_function(model) -> Callable:
    """Black-box ``X (n, d) -> y (n,)`` for any supported model type."""
    if isinstance(model, Ensemble):
        members = [model_function(m) for m in model.members]
        return lambda x: np.mean([f(x) for f in members], axis=0)
    if isinstance(model, BnnParams):
        return model_function(model.mean_network())
    if isinstance(model, MlpParams):
        return lambda x: np.atleast_1d(forward(model, np.atleast_2d(x))[0])
    if isinstance(model, RnnParams):
        return lambda x: np.atleast_1d(rnn_forward(model, np.atleast_2d(x))[0])
    if callable(model):
        return lambda x: np.atleast_1d(np.asarray(model(np.atleast_2d(x)), dtype=float))
    raise ConfigError(f"unsupported model type {type(model).__name__}")


def input_dim(model) -> Optional[int]:
    if isinstance(model, Ensemble):
        return input_dim(model.members[0])
    if isinstance(model, BnnParams):
        return model.mean_network().input_dim
    if isinstance(model, MlpParams):
        return model.input_dim
    return None


# --------------------------------------------------------------------------
# DeepLIFT
# --------------------------------------------------------------------------

def _rescale(dz, da, slope):
    """Multiplier da/dz, falling back to the local slope where dz vanishes."""
    small = np.abs(dz) < 1e-12
    return np.where(small, slope, da / np.where(small, 1.0, dz))


def _slope(z, a, act):
    if act is Activation.RELU:
        return (z > 0).astype(float)
    if act is Activation.TANH:
        return 1.0 - a * a
    raise ConfigError(f"DeepLIFT does not support activation {act!r}")


def _deeplift_mlp(p: MlpParams, x, x0):
    if p.activation not in (Activation.RELU, Activation.TANH):
        raise ConfigError(f"DeepLIFT does not support activation {p.activation!r}")
    _, cache = forward(p, x)
    _, cache0 = forward(p, x0[None, :])
    n = len(x)
    m = np.full((n, 1), p.out_scale)  # multiplier of the raw output
    for i in range(len(p.weights) - 1, -1, -1):
        m = m @ p.weights[i].T  # multiplier of layer i's input activation
        if i:
            z, a = cache[i]
            z0, a0 = cache0[i]
            m = m * _rescale(z - z0, a - a0, _slope(z, a, p.activation))
    return m * (x - x0)


def _deeplift_rnn(p: RnnParams, x, x0):
    _, hs = rnn_forward(p, x)
    _, hs0 = rnn_forward(p, x0[None, :])
    n, w = x.shape
    scores = np.zeros((n, w))
    m_h = np.tile(p.w_out * p.out_scale, (n, 1))
    for t in range(w, 0, -1):
        h, h0 = hs[t], hs0[t]
        z = x[:, t - 1:t] * p.w_in + hs[t - 1] @ p.w_rec + p.b
        z0 = x0[t - 1] * p.w_in + hs0[t - 1] @ p.w_rec + p.b
        m_z = m_h * _rescale(z - z0, h - h0, 1.0 - h * h)
        scores[:, t - 1] = (m_z @ p.w_in) * (x[:, t - 1] - x0[t - 1])
        m_h = m_z @ p.w_rec.T
    return scores


def deeplift_batch(model, x, baseline: Baseline) -> np.ndarray:
    """DeepLIFT scores for every row of ``x``; returns an (n, d) matrix."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    x0 = baseline.x0
    if x.shape[1] != len(x0):
        raise ConfigError(f"baseline has {len(x0)} entries, inputs have {x.shape[1]}")
    if isinstance(model, Ensemble):
        return np.mean([deeplift_batch(m, x, baseline) for m in model.members], axis=0)
    if isinstance(model, BnnParams):
        return _deeplift_mlp(model.mean_network(), x, x0)
    if isinstance(model, MlpParams):
        return _deeplift_mlp(model, x, x0)
    if isinstance(model, RnnParams):
        return _deeplift_rnn(model, x, x0)
    raise ConfigError(f"DeepLIFT needs a network, got {type(model).__name__}")


def deeplift(model, x, baseline: Baseline, feature_names=()) -> AttributionVector:
    return AttributionVector(deeplift_batch(model, x, baseline)[0], AttrMethod.DEEPLIFT,
                             tuple(feature_names))


# --------------------------------------------------------------------------
# Shapley values
# --------------------------------------------------------------------------

def _subset_weights(n):
    return np.array([math.factorial(k) * math.factorial(n - k - 1) / math.factorial(n)
                     for k in range(n)])


def shapley_exact_batch(f: Callable, x, x0) -> np.ndarray:
    """Exact Shapley values by enumerating all 2^d coalitions, for each row of ``x``.

    Features outside a coalition take their baseline value.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, d = x.shape
    if d > MAX_EXACT_FEATURES:
        raise ConfigError(f"exact Shapley enumeration is limited to {MAX_EXACT_FEATURES} "
                          f"features (got {d}); use shapley_sampled instead")
    codes = np.arange(2 ** d)
    masks = ((codes[:, None] >> np.arange(d)) & 1).astype(bool)  # (2^d, d)
    inputs = np.where(masks[None, :, :], x[:, None, :], x0[None, None, :])
    v = np.asarray(f(inputs.reshape(-1, d)), dtype=float).reshape(n, 2 ** d)
    size = masks.sum(axis=1)
    w = _subset_weights(d)
    phi = np.zeros((n, d))
    for i in range(d):
        without = codes[~masks[:, i]]
        with_i = without | (1 << i)
        phi[:, i] = (v[:, with_i] - v[:, without]) @ w[size[without]]
    return phi


def shapley_exact(model, x, baseline: Baseline, feature_names=()) -> AttributionVector:
    f = model_function(model)
    scores = shapley_exact_batch(f, np.asarray(x, dtype=float)[None, :], baseline.x0)[0]
    return AttributionVector(scores, AttrMethod.SHAPLEY_EXACT, tuple(feature_names))


def _permutation_estimate(f, x, x0, perms):
    """Mean marginal contributions along the given feature orderings."""
    m, d = perms.shape
    rank = np.argsort(perms, axis=1)  # position of every feature in each ordering
    steps = np.arange(d + 1)
    masks = rank[:, None, :] < steps[None, :, None]  # (m, d+1, d)
    inputs = np.where(masks, x[None, None, :], x0[None, None, :])
    v = np.asarray(f(inputs.reshape(-1, d)), dtype=float).reshape(m, d + 1)
    phi = np.zeros((m, d))
    np.put_along_axis(phi, perms, np.diff(v, axis=1), axis=1)
    return phi.mean(axis=0)


def stratified_orderings(d: int, count: int, rng) -> np.ndarray:
    """``count`` feature orderings built from position-stratified blocks.

    A block takes one random ordering, its ``d`` cyclic rotations and their
    reverses, so inside a block every feature sits at every position exactly
    twice.  This balances coalition sizes and removes most of the variance
    of plain permutation sampling.
    """
    out = []
    while len(out) < count:
        base = rng.permutation(d)
        for shift in range(d):
            rot = np.roll(base, shift)
            out += [rot, rot[::-1]]
    return np.array(out[:count])


def shapley_sampled_scores(f: Callable, x, x0, repeats: int = 20, n_permutations: int = 2,
                           rng=None) -> np.ndarray:
    """Permutation-sampling Shapley estimate, averaged over ``repeats`` rounds.

    Each round uses ``n_permutations`` orderings taken in turn from one
    stream of position-stratified blocks (see :func:`stratified_orderings`).
    Every ordering is itself complete, so the estimate sums exactly to
    f(x) - f(x0).
    """
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    if n_permutations < 1:
        raise ConfigError("n_permutations must be >= 1")
    rng = np.random.default_rng(0) if rng is None else rng
    x = np.asarray(x, dtype=float).reshape(-1)
    perms = stratified_orderings(len(x), repeats * n_permutations, rng)
    rounds = [_permutation_estimate(f, x, x0, perms[r * n_permutations:(r + 1) * n_permutations])
              for r in range(repeats)]
    return np.mean(rounds, axis=0)


def shapley_sampled(model, x, baseline: Baseline, repeats: int = 20, seed: int = 0,
                    n_permutations: int = 2, feature_names=()) -> AttributionVector:
    scores = shapley_sampled_scores(model_function(model), x, baseline.x0, repeats,
                                    n_permutations, np.random.default_rng(seed))
    return AttributionVector(scores, AttrMethod.SHAPLEY_SAMPLED, tuple(feature_names))


# --------------------------------------------------------------------------
# maps
# --------------------------------------------------------------------------

@dataclass
class AttributionMap:
    scores: np.ndarray  # (n_samples, n_features)
    feature_names: tuple
    method: AttrMethod
    model_id: str = ""
    tau: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.method = AttrMethod(self.method)
        self.scores = np.atleast_2d(np.asarray(self.scores, dtype=float))
        self.feature_names = tuple(self.feature_names)
        if self.scores.shape[1] != len(self.feature_names):
            raise ConfigError("feature_names does not match the map width")
        if self.tau is not None and len(self.tau) != len(self.scores):
            raise ConfigError("tau must have one entry per map row")

    @property
    def n_samples(self) -> int:
        return self.scores.shape[0]

    def column(self, name) -> np.ndarray:
        return self.scores[:, self.feature_names.index(name)]

    def mean_abs(self) -> dict:
        return dict(zip(self.feature_names, np.abs(self.scores).mean(axis=0).tolist()))

    def to_csv(self, path) -> Path:
        """Rows are samples (tau first), columns features; metadata in a sidecar."""
        path = Path(path)
        tau = self.tau if self.tau is not None else np.arange(self.n_samples, dtype=float)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(("tau",) + self.feature_names) + "\n")
            for t, row in zip(tau, self.scores):
                fh.write(",".join(format(float(v), ".17g") for v in (t, *row)) + "\n")
        meta = {"method": self.method.value, "model_id": self.model_id,
                "feature_names": list(self.feature_names), "n_samples": self.n_samples,
                **self.meta}
        sidecar_path(path).write_text(json.dumps(meta, indent=2, ensure_ascii=False))
        return path

    @classmethod
    def from_csv(cls, path) -> "AttributionMap":
        path = Path(path)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, encoding="utf-8")
        meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
        extra = {k: v for k, v in meta.items()
                 if k not in ("method", "model_id", "feature_names", "n_samples")}
        return cls(data[:, 1:], tuple(meta["feature_names"]), meta["method"],
                   meta.get("model_id", ""), data[:, 0], extra)


def attribute_map(model, dataset: Dataset, method, baseline: Baseline, seed: int = 0,
                  repeats: int = 20, n_permutations: int = 2, model_id: str = "") -> AttributionMap:
    """One attribution vector per dataset row, in time order.

    ``AttrMethod.SHAPLEY`` resolves to exact enumeration for at most
    ``EXACT_THRESHOLD`` features and to permutation sampling otherwise.
    Sampled rows use the seed stream ``[seed, row]``.
    """
    method = AttrMethod(method)
    x = dataset.features
    dim = input_dim(model)
    if dim is not None and dim != x.shape[1]:
        raise ConfigError(f"model expects {dim} features, dataset has {x.shape[1]}")
    if len(baseline.x0) != x.shape[1]:
        raise ConfigError(f"baseline has {len(baseline.x0)} entries, dataset has {x.shape[1]}")
    if method is AttrMethod.SHAPLEY:
        method = AttrMethod.SHAPLEY_EXACT if x.shape[1] <= EXACT_THRESHOLD else AttrMethod.SHAPLEY_SAMPLED

    meta = {"baseline_policy": baseline.policy.value, "baseline": baseline.x0.tolist(), "seed": seed,
            "aggregation": _aggregation(model)}
    if method is AttrMethod.DEEPLIFT:
        scores = deeplift_batch(model, x, baseline)
    elif method is AttrMethod.SHAPLEY_EXACT:
        scores = shapley_exact_batch(model_function(model), x, baseline.x0)
    else:
        f = model_function(model)
        meta.update(repeats=repeats, n_permutations=n_permutations)
        scores = np.zeros_like(x)
        for i in range(len(x)):
            try:
                scores[i] = shapley_sampled_scores(f, x[i], baseline.x0, repeats, n_permutations,
                                                   np.random.default_rng([int(seed), i]))
            except Exception as exc:
                raise AttributionError(f"row {i}: {exc}", index=i) from exc
    bad = np.flatnonzero(~np.all(np.isfinite(scores), axis=1))
    if len(bad):
        raise AttributionError(f"non-finite attribution at row {bad[0]}", index=int(bad[0]))
    return AttributionMap(scores, dataset.feature_names, method, model_id,
                          None if dataset.tau is None else dataset.tau.copy(), meta)


def _aggregation(model) -> str:
    if isinstance(model, Ensemble):
        return "mean over ensemble members"
    if isinstance(model, BnnParams):
        return "posterior-mean network"
    return "single network"


# --------------------------------------------------------------------------
# plausibility
# --------------------------------------------------------------------------

SALINITY_FEATURES = ("ΔS", "S1", "S2")


def plausibility_report(amap: AttributionMap, mode=Mode.PI) -> dict:
    """Physical sanity flags for a PI attribution map.

    ``salinity_dominant``: the mean |score| over salinity columns beats every
    other column's mean |score|.  ``polarity_opposed``: mean scores of S1 and
    S2 have opposite, nonzero signs; ``None`` when the map has no S1/S2 pair.
    """
    if Mode(mode) is not Mode.PI:
        raise ConfigError("plausibility checks apply to PI maps only")
    names = amap.feature_names
    sal = [n for n in names if n in SALINITY_FEATURES]
    if not sal:
        raise ConfigError(f"map has no salinity column; expected one of {SALINITY_FEATURES}")
    mean_abs = np.abs(amap.scores).mean(axis=0)
    sal_score = float(np.mean([mean_abs[names.index(n)] for n in sal]))
    others = [float(mean_abs[i]) for i, n in enumerate(names) if n not in SALINITY_FEATURES]
    dominant = bool(sal_score > 0 and all(sal_score > o for o in others))
    polarity = None
    if "S1" in names and "S2" in names:
        m1 = float(amap.column("S1").mean())
        m2 = float(amap.column("S2").mean())
        polarity = bool(m1 != 0 and m2 != 0 and np.sign(m1) == -np.sign(m2))
    return {"salinity_dominant": dominant, "polarity_opposed": polarity,
            "salinity_mean_abs": sal_score, "mean_abs": dict(zip(names, mean_abs.tolist()))}
