"""Supervised datasets from box-model trajectories.

Two feature modes:

* PI (physics-informed): the physical state and forcing at tau predict q_tau.
* AR (autoregressive): the previous ``window`` values of q predict q_tau.

Splits are chronological and features are standardized on train statistics
only.  Targets are never rescaled here.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .boxmodel import Trajectory, Variant
from .errors import ConfigError


class Mode(str, Enum):
    PI = "PI"
    AR = "AR"


def lag_names(window: int) -> tuple:
    return tuple(f"τ−{lag}" for lag in range(window, 0, -1))


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple
    mode: Mode
    window: Optional[int] = None
    tau: Optional[np.ndarray] = None
    target_name: str = "q"

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.targets, dtype=float)
        if x.ndim != 2:
            raise ConfigError("features must be a 2-D matrix")
        if x.shape[0] != y.shape[0]:
            raise ConfigError(f"{x.shape[0]} feature rows but {y.shape[0]} targets")
        if x.shape[1] != len(self.feature_names):
            raise ConfigError("feature_names does not match the feature count")
        if self.mode is Mode.AR:
            if self.window is None or self.window < 1 or x.shape[1] != self.window:
                raise ConfigError("AR datasets need window >= 1 equal to the feature count")
        if self.tau is not None and len(self.tau) != len(y):
            raise ConfigError("tau must align with the targets")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "targets", y)

    def __len__(self):
        return len(self.targets)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def rows(self, sl) -> "Dataset":
        return replace(self, features=self.features[sl], targets=self.targets[sl],
                       tau=None if self.tau is None else self.tau[sl])


def build_pi(traj: Trajectory, variant: Optional[Variant] = None) -> Dataset:
    """Physics-informed features aligned with q at the same tau.

    Standard variant: ``(ΔS, F_s)`` when ``F_t`` is identically zero (ΔT then
    decays to zero and carries no information), otherwise
    ``(ΔS, ΔT, F_s, F_t)``.  Extended variant: ``(S1, S2, T1, T2, F_s, F_t)``.
    """
    variant = Variant(variant) if variant is not None else traj.variant
    if variant is Variant.EXTENDED:
        cols = [("S1", "s1"), ("S2", "s2"), ("T1", "t1"), ("T2", "t2"),
                ("F_s", "fs"), ("F_t", "ft")]
    elif np.all(traj.ft == 0):
        cols = [("ΔS", "delta_s"), ("F_s", "fs")]
    else:
        cols = [("ΔS", "delta_s"), ("ΔT", "delta_t"), ("F_s", "fs"), ("F_t", "ft")]
    for _, attr in cols:
        if not traj.has(attr):
            raise ConfigError(f"trajectory is missing column '{attr}' for a {variant.value} PI dataset")
    x = np.column_stack([traj.column(attr) for _, attr in cols])
    return Dataset(x, traj.q.copy(), tuple(n for n, _ in cols), Mode.PI, tau=traj.tau.copy())


def build_ar(traj: Trajectory, window: int = 10) -> Dataset:
    """Sliding windows: row i holds ``q[i:i+window]`` and targets ``q[i+window]``."""
    if window < 1:
        raise ConfigError("window must be >= 1")
    q = np.asarray(traj.q, dtype=float)
    if len(q) <= window:
        raise ConfigError(f"trajectory of length {len(q)} is too short for window {window}")
    x = np.lib.stride_tricks.sliding_window_view(q, window)[:-1].copy()
    return Dataset(x, q[window:].copy(), lag_names(window), Mode.AR, window=window,
                   tau=traj.tau[window:].copy())


@dataclass(frozen=True)
class Split:
    train: Dataset
    test: Dataset
    boundary_index: int


def split_chrono(ds: Dataset, ratio: float = 0.7) -> Split:
    """First ``round(ratio * n)`` rows (half rounds up) train, the rest test."""
    if not 0 < ratio < 1:
        raise ConfigError("ratio must lie in (0, 1)")
    n = len(ds)
    if n < 10:
        raise ConfigError(f"need at least 10 samples to split, got {n}")
    # round-half-up; the epsilon absorbs 0.7 * n landing just below x.5
    n_train = int(math.floor(ratio * n + 0.5 + 1e-9))
    n_train = min(max(n_train, 1), n - 1)
    return Split(ds.rows(slice(0, n_train)), ds.rows(slice(n_train, n)), n_train)


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray
    feature_names: tuple = ()

    def transform(self, x):
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def inverse_transform(self, z):
        return np.asarray(z, dtype=float) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(),
                "feature_names": list(self.feature_names)}

    @classmethod
    def from_dict(cls, d) -> "Scaler":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float),
                   tuple(d.get("feature_names", ())))


def fit_scaler(ds: Dataset) -> Scaler:
    mean = ds.features.mean(axis=0)
    std = ds.features.std(axis=0)
    for name, m, s in zip(ds.feature_names, mean, std):
        if not s > 1e-12 * max(1.0, abs(m)):
            raise ConfigError(f"feature '{name}' is constant on the training split")
    return Scaler(mean, std, ds.feature_names)


def fit_apply_scaler(split: Split):
    """Standardize features with train statistics; returns ``(split, scaler)``."""
    scaler = fit_scaler(split.train)
    scaled = Split(
        replace(split.train, features=scaler.transform(split.train.features)),
        replace(split.test, features=scaler.transform(split.test.features)),
        split.boundary_index,
    )
    return scaled, scaler


# --------------------------------------------------------------------------
# file interface
# --------------------------------------------------------------------------

def write_dataset(ds: Dataset, path, scaler: Optional[Scaler] = None,
                  extra: Optional[dict] = None) -> Path:
    """CSV (features then target) plus a ``.meta.json`` sidecar; returns the sidecar path."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(ds.feature_names) + [ds.target_name])
        for row, target in zip(ds.features, ds.targets):
            w.writerow([format(float(v), ".17g") for v in row] + [format(float(target), ".17g")])
    meta = {
        "mode": ds.mode.value,
        "window": ds.window,
        "feature_names": list(ds.feature_names),
        "target_name": ds.target_name,
        "n_samples": len(ds),
        "scaler": scaler.to_dict() if scaler is not None else None,
        "tau": None if ds.tau is None else [float(t) for t in ds.tau],
    }
    if extra:
        meta.update(extra)
    side = sidecar_path(path)
    side.write_text(json.dumps(meta, indent=2, ensure_ascii=False))
    return side


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def read_dataset(path):
    """Inverse of :func:`write_dataset`; returns ``(dataset, scaler_or_None, meta)``."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    meta = json.loads(sidecar_path(path).read_text())
    tau = None if meta.get("tau") is None else np.asarray(meta["tau"], dtype=float)
    ds = Dataset(data[:, :-1], data[:, -1], tuple(header[:-1]), Mode(meta["mode"]),
                 window=meta.get("window"), tau=tau, target_name=header[-1])
    scaler = Scaler.from_dict(meta["scaler"]) if meta.get("scaler") else None
    return ds, scaler, meta


def concat(parts: Sequence[Dataset]) -> Dataset:
    first = parts[0]
    tau = None if any(p.tau is None for p in parts) else np.concatenate([p.tau for p in parts])
    return replace(first, features=np.vstack([p.features for p in parts]),
                   targets=np.concatenate([p.targets for p in parts]), tau=tau)
