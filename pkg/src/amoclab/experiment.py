"""End-to-end experiment runner: simulate, build data, train, evaluate, attribute.

A single global seed drives every random choice.  Ensemble member m uses
``seed + m``; the BNN prior sweep reuses ``seed`` for every sigma so that the
runs differ only in the prior.  Bundles contain no timestamps, so identical
configurations give byte-identical files.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .attribution import AttrMethod, attribute_map, make_baseline, plausibility_report
from .datagen import (Dataset, Mode, Split, build_ar, build_pi, fit_apply_scaler, split_chrono,
                      write_dataset)
from .errors import ConfigError, StageError
from .evaluation import PredictionSeries, metrics, report_stem, write_report
from .forcing import SCENARIO_IDS, scenario
from .neural.bnn import BnnParams, predict_bnn, train_bnn
from .neural.checkpoint import save_checkpoint
from .neural.mlp import MlpParams, NetSpec, predict
from .neural.rnn import RnnParams, predict_rnn, train_rnn
from .neural.training import Ensemble, TrainConfig, predict_ensemble, train_ensemble, train_mlp


class Arch(str, Enum):
    MLP = "MLP"
    DE = "DE"
    BNN = "BNN"
    RNN = "RNN"


MAIN_ARCHS = (Arch.MLP, Arch.DE, Arch.BNN)
DEFAULT_SIGMAS = (0.1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
NEAR_CONSTANT_RATIO = 0.05


@dataclass
class ExperimentConfig:
    scenario: str = "F1"
    overrides: Dict[str, str] = field(default_factory=dict)
    feature_mode: Mode = Mode.PI
    architecture: Arch = Arch.MLP
    hidden_layers: tuple = (64, 64)
    activation: str = "relu"
    epochs: int = 120
    lr: float = 3e-3
    batch_size: int = 32
    mc_train_samples: int = 4
    kl_weight: Optional[float] = None
    ensemble_size: int = 10
    prior_std: float = 0.1
    bnn_samples: int = 100
    rnn_hidden: int = 32
    window: int = 10
    train_ratio: float = 0.7
    attribution: tuple = ("deeplift", "shapley")
    baseline_policy: str = "train_mean"
    shapley_repeats: int = 20
    shapley_permutations: int = 2
    threshold_fraction: float = 0.3
    spike_window: int = 10
    out_dir: str = "runs"
    seed: int = 0

    def __post_init__(self):
        self.scenario = str(self.scenario).upper()
        self.feature_mode = Mode(self.feature_mode)
        self.architecture = Arch(str(getattr(self.architecture, "value", self.architecture)).upper())
        self.hidden_layers = tuple(int(w) for w in self.hidden_layers)
        self.attribution = tuple(AttrMethod(m).value for m in self.attribution)
        self.overrides = {str(k): v for k, v in dict(self.overrides).items()}

    def validate(self) -> "ExperimentConfig":
        if self.scenario not in SCENARIO_IDS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.architecture is Arch.RNN and self.feature_mode is not Mode.AR:
            raise ConfigError("the RNN architecture is only defined for AR features")
        if self.ensemble_size < 1:
            raise ConfigError("ensemble_size must be >= 1")
        if not self.prior_std > 0:
            raise ConfigError("prior_std must be positive")
        self.train_config()
        return self

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, lr=self.lr, batch_size=self.batch_size, seed=self.seed,
                           mc_train_samples=self.mc_train_samples, kl_weight=self.kl_weight)

    @property
    def stem(self) -> str:
        return report_stem(self.scenario, self.feature_mode.value, self.architecture.value)

    def resolved(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            d[f.name] = v.value if isinstance(v, Enum) else (list(v) if isinstance(v, tuple) else v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown experiment fields {sorted(unknown)}")
        typed = {}
        for name, value in d.items():
            default = getattr(cls(), name)
            typed[name] = _coerce_field(value, default, name)
        return cls(**typed)


def _coerce_field(value, default, name):
    if not isinstance(value, str):
        return value
    if name == "kl_weight":
        return None if value.strip().lower() in ("", "none") else float(value)
    if isinstance(default, tuple):
        return tuple(v.strip() for v in value.split(",") if v.strip())
    if isinstance(default, bool):
        return value.strip().lower() in ("1", "true", "yes")
    if isinstance(default, int) and not isinstance(default, Enum):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def read_experiment_file(path) -> ExperimentConfig:
    """INI file: an ``[experiment]`` section plus optional ``[overrides]``.

    Override keys use the dotted scenario form (``fs.amplitude = 1e11``).
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str
    with open(path) as fh:
        parser.read_file(fh)
    d = dict(parser.items("experiment")) if parser.has_section("experiment") else {}
    if parser.has_section("overrides"):
        d["overrides"] = dict(parser.items("overrides"))
    return ExperimentConfig.from_dict(d)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def build_dataset(traj, mode: Mode, window: int = 10) -> Dataset:
    return build_pi(traj) if Mode(mode) is Mode.PI else build_ar(traj, window)


def scaled_full(ds: Dataset, scaler) -> Dataset:
    return replace(ds, features=scaler.transform(ds.features))


def train_model(cfg: ExperimentConfig, split: Split):
    """Fit the configured architecture; returns ``(model, spec_or_None, curves)``."""
    tc = cfg.train_config()
    n_in = split.train.n_features
    if cfg.architecture is Arch.RNN:
        model, curve = train_rnn(split, cfg.rnn_hidden, tc)
        return model, None, [curve]
    spec = NetSpec(n_in, cfg.hidden_layers, cfg.activation, seed=cfg.seed)
    if cfg.architecture is Arch.MLP:
        model, curve = train_mlp(split, spec, tc)
        return model, spec, [curve]
    if cfg.architecture is Arch.DE:
        model, curves = train_ensemble(split, spec, tc, cfg.ensemble_size)
        return model, spec, curves
    model, curve = train_bnn(split, spec, tc, prior_std=cfg.prior_std)
    return model, spec, [curve]


def predict_model(model, x, n_samples: int = 100, seed: int = 0):
    """Prediction mean and spread for any supported model; spread is 0 for point models."""
    if isinstance(model, Ensemble):
        return predict_ensemble(model, x)
    if isinstance(model, BnnParams):
        return predict_bnn(model, x, n_samples, seed)
    if isinstance(model, MlpParams):
        y = predict(model, x)
        return y, np.zeros_like(y)
    if isinstance(model, RnnParams):
        y = predict_rnn(model, x)
        return y, np.zeros_like(y)
    raise ConfigError(f"unsupported model type {type(model).__name__}")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=True) + "\n",
                    encoding="utf-8")
    return path


def _write_curves(path: Path, curves) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["member", "epoch", "train_mse", "test_mse"])
        for m, c in enumerate(curves):
            for e, (a, b) in enumerate(zip(c.train_mse, c.test_mse)):
                w.writerow([m, e + 1, format(a, ".17g"), format(b, ".17g")])
    return path


@dataclass
class Bundle:
    out_dir: Path
    manifest: dict
    metrics: dict
    model: object = None
    series: Optional[PredictionSeries] = None
    maps: dict = field(default_factory=dict)

    def path(self, name) -> Path:
        return self.out_dir / name


class _Recorder:
    """Tracks written files so that failures can report a partial manifest."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: List[Path] = []

    def add(self, *paths):
        for p in paths:
            self.files.append(Path(p))

    def manifest(self, status="ok", stage=None, error=None) -> dict:
        entries = [{"file": p.relative_to(self.out_dir).as_posix(), "sha256": sha256_file(p),
                    "bytes": p.stat().st_size}
                   for p in sorted(set(self.files)) if p.exists()]
        m = {"status": status, "files": entries}
        if stage is not None:
            m["failed_stage"] = stage
            m["error"] = error
        return m

    def write_manifest(self, **kw) -> dict:
        m = self.manifest(**kw)
        _write_json(self.out_dir / "manifest.json", m)
        return m


# --------------------------------------------------------------------------
# one experiment
# --------------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, out_dir=None) -> Bundle:
    """Run every stage and write a hashed bundle to ``out_dir`` (default ``cfg.out_dir``).

    Files: ``config.json``, ``trajectory.csv``, ``dataset.csv`` (+ train/test
    splits, raw features, sidecars carry the scaler), ``checkpoint.json``,
    ``loss_curve.csv``, ``<scenario>_<mode>_<arch>.csv/.json`` (predictions,
    bias, uncertainty band, metrics, events), ``attribution_<method>.csv``
    (+ sidecars) and ``manifest.json``.
    """
    cfg.validate()
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rec = _Recorder(out)
    stage = "config"
    try:
        sc = scenario(cfg.scenario, cfg.overrides)
        rec.add(_write_json(out / "config.json",
                            {"experiment": cfg.resolved(), "scenario": sc.resolved()}))

        stage = "simulate"
        traj = sc.integrate()
        traj.to_csv(out / "trajectory.csv")
        rec.add(out / "trajectory.csv")

        stage = "dataset"
        ds = build_dataset(traj, cfg.feature_mode, cfg.window)
        raw_split = split_chrono(ds, cfg.train_ratio)
        split, scaler = fit_apply_scaler(raw_split)
        info = {"boundary_index": raw_split.boundary_index, "scenario": cfg.scenario}
        for name, part in (("dataset", ds), ("dataset_train", raw_split.train),
                           ("dataset_test", raw_split.test)):
            side = write_dataset(part, out / f"{name}.csv", scaler, info)
            rec.add(out / f"{name}.csv", side)

        stage = "train"
        model, spec, curves = train_model(cfg, split)
        ckpt = save_checkpoint(out / "checkpoint.json", model, spec, cfg.train_config(), scaler,
                               {"architecture": cfg.architecture.value, "prior_std": cfg.prior_std,
                                "rnn_hidden": cfg.rnn_hidden})
        rec.add(ckpt, _write_curves(out / "loss_curve.csv", curves))
        model_id = sha256_file(ckpt)[:16]

        stage = "evaluate"
        full = scaled_full(ds, scaler)
        mean, std = predict_model(model, full.features, cfg.bnn_samples, cfg.seed)
        ps = PredictionSeries(ds.tau, ds.targets, mean, std, raw_split.boundary_index)
        test_std_pred = float(np.std(mean[raw_split.boundary_index:]))
        test_std_true = float(np.std(ds.targets[raw_split.boundary_index:]))
        extra = {"model_id": model_id,
                 "near_constant": bool(test_std_pred < NEAR_CONSTANT_RATIO * test_std_true),
                 "test_pred_std": test_std_pred, "test_true_std": test_std_true}

        stage = "attribute"
        maps = {}
        baseline = make_baseline(cfg.baseline_policy, dim=ds.n_features,
                                 train_features=split.train.features)
        for meth in cfg.attribution:
            amap = attribute_map(model, full, meth, baseline, seed=cfg.seed,
                                 repeats=cfg.shapley_repeats, n_permutations=cfg.shapley_permutations,
                                 model_id=model_id)
            amap.meta["split_boundary"] = raw_split.boundary_index
            path = amap.to_csv(out / f"attribution_{meth}.csv")
            rec.add(path, path.with_name(path.stem + ".meta.json"))
            maps[meth] = amap
            if cfg.feature_mode is Mode.PI:
                rep = plausibility_report(amap)
                extra[f"plausibility_{meth}"] = {k: rep[k] for k in ("salinity_dominant",
                                                                     "polarity_opposed")}
            extra[f"mean_abs_{meth}"] = amap.mean_abs()

        stage = "report"
        rec.add(*write_report(ps, out, cfg.scenario, cfg.feature_mode.value, cfg.architecture.value,
                              cfg.threshold_fraction, cfg.spike_window, extra))
        manifest = rec.write_manifest()
        summary = {**metrics(ps), **{k: v for k, v in extra.items() if not isinstance(v, dict)}}
        return Bundle(out, manifest, summary, model, ps, maps)
    except StageError:
        raise
    except Exception as exc:
        manifest = rec.write_manifest(status="failed", stage=stage, error=str(exc))
        raise StageError(stage, exc, manifest) from exc


# --------------------------------------------------------------------------
# grid and prior sweep
# --------------------------------------------------------------------------

SUMMARY_FIELDS = ("scenario", "mode", "arch", "status", "mse", "mae", "test_mse", "test_mae",
                  "skill_vs_mean", "near_constant", "error")


def grid_cells(scenarios: Sequence[str], modes: Sequence, archs: Sequence) -> list:
    """Valid (scenario, mode, arch) triples; RNN is paired with AR only."""
    cells = []
    for s in scenarios:
        for m in modes:
            for a in archs:
                m_, a_ = Mode(m), Arch(str(getattr(a, "value", a)).upper())
                if a_ is Arch.RNN and m_ is not Mode.AR:
                    continue
                cells.append((str(s).upper(), m_, a_))
    return cells


def run_grid(scenarios: Sequence[str], modes: Sequence = (Mode.PI, Mode.AR),
             archs: Sequence = MAIN_ARCHS, seed: int = 0, base: Optional[ExperimentConfig] = None,
             out_dir=None) -> List[dict]:
    """Run every valid cell into ``<out>/<scenario>_<mode>_<arch>/``; writes ``summary.csv``.

    A failing cell is recorded with its stage and message and the grid goes on.
    """
    base = base or ExperimentConfig()
    out = Path(out_dir if out_dir is not None else base.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for sid, mode, arch in grid_cells(scenarios, modes, archs):
        cfg = replace(base, scenario=sid, feature_mode=mode, architecture=arch, seed=seed)
        row = {"scenario": sid, "mode": mode.value, "arch": arch.value}
        try:
            b = run_experiment(cfg, out / cfg.stem)
            row.update(status="ok", **{k: b.metrics.get(k) for k in SUMMARY_FIELDS
                                       if k in b.metrics})
        except StageError as exc:
            row.update(status="failed", error=str(exc))
        rows.append(row)
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in SUMMARY_FIELDS})
    return rows


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def sweep_bnn_prior(cfg: ExperimentConfig, sigmas: Sequence[float] = DEFAULT_SIGMAS,
                    out_dir=None) -> List[dict]:
    """Train one BNN per prior std and flag near-constant test predictions.

    A run is near-constant when the std of its test predictions is below
    ``NEAR_CONSTANT_RATIO`` times the std of the true test series.
    """
    sigmas = [float(s) for s in sigmas]
    if not sigmas or any(not s > 0 for s in sigmas):
        raise ConfigError("every prior std must be positive")
    cfg = replace(cfg, architecture=Arch.BNN)
    cfg.validate()
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for s in sigmas:
        b = run_experiment(replace(cfg, prior_std=s), out / f"{cfg.stem}_sigma_{s:g}")
        m = b.metrics
        rows.append({"scenario": cfg.scenario, "mode": cfg.feature_mode.value, "sigma": s,
                     "near_constant": m["near_constant"], "test_pred_std": m["test_pred_std"],
                     "test_true_std": m["test_true_std"], "test_mse": m["test_mse"],
                     "skill_vs_mean": m["skill_vs_mean"]})
    keys = list(rows[0])
    with open(out / f"{cfg.stem}_sigma_sweep.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r[k]) for k in keys})
    return rows
