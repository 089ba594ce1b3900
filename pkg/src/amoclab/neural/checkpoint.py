"""JSON checkpoints for every model type.

Arrays are stored flat with their shapes.  Python's float repr round-trips
exactly, so a loaded model reproduces predictions bit for bit.
"""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path
from typing import Optional

import numpy as np

from ..datagen import Scaler
from ..errors import ConfigError
from .bnn import BnnParams
from .mlp import MlpParams, NetSpec
from .rnn import RnnParams
from .training import Ensemble, TrainConfig

FORMAT_VERSION = 1


def _pack(arrays):
    return [{"shape": list(a.shape), "data": [float(v) for v in np.ravel(a)]} for a in arrays]


def _unpack(entries):
    return [np.array(e["data"], dtype=float).reshape(e["shape"]) for e in entries]


def _model_dict(model) -> dict:
    if isinstance(model, Ensemble):
        return {"kind": "ensemble", "members": [_model_dict(m) for m in model.members]}
    if isinstance(model, BnnParams):
        return {"kind": "bnn", "activation": model.activation.value, "prior_std": model.prior_std,
                "out_shift": model.out_shift, "out_scale": model.out_scale,
                "arrays": _pack(model.arrays())}
    if isinstance(model, MlpParams):
        return {"kind": "mlp", "activation": model.activation.value,
                "out_shift": model.out_shift, "out_scale": model.out_scale,
                "arrays": _pack(model.arrays())}
    if isinstance(model, RnnParams):
        return {"kind": "rnn", "out_shift": model.out_shift, "out_scale": model.out_scale,
                "arrays": _pack(model.arrays())}
    raise ConfigError(f"cannot checkpoint a {type(model).__name__}")


def _model_from_dict(d, spec: Optional[NetSpec] = None):
    kind = d["kind"]
    if kind == "ensemble":
        return Ensemble([_model_from_dict(m) for m in d["members"]], spec)
    arrays = _unpack(d["arrays"])
    if kind == "mlp":
        p = MlpParams([np.zeros((1, 1))], [np.zeros(1)], d["activation"], d["out_shift"], d["out_scale"])
        return p.with_arrays(arrays)
    if kind == "bnn":
        return BnnParams(arrays[0::4], arrays[1::4], arrays[2::4], arrays[3::4], d["prior_std"],
                         d["activation"], d["out_shift"], d["out_scale"])
    if kind == "rnn":
        return RnnParams(*arrays, out_shift=d["out_shift"], out_scale=d["out_scale"])
    raise ConfigError(f"unknown checkpoint model kind {kind!r}")


def checkpoint_dict(model, spec: Optional[NetSpec] = None, train: Optional[TrainConfig] = None,
                    scaler: Optional[Scaler] = None, extra: Optional[dict] = None) -> dict:
    d = {
        "format_version": FORMAT_VERSION,
        "net_spec": None if spec is None else {**asdict(spec), "activation": spec.activation.value,
                                               "hidden_layers": list(spec.hidden_layers)},
        "train_config": None if train is None else asdict(train),
        "scaler": None if scaler is None else scaler.to_dict(),
        "model": _model_dict(model),
    }
    if extra:
        d["extra"] = extra
    return d


def save_checkpoint(path, model, spec=None, train=None, scaler=None, extra=None) -> Path:
    path = Path(path)
    text = json.dumps(checkpoint_dict(model, spec, train, scaler, extra), ensure_ascii=False)
    path.write_text(text, encoding="utf-8")
    return path


def load_checkpoint(path) -> dict:
    """Returns a dict with ``model``, ``net_spec``, ``train_config``, ``scaler`` and ``extra``."""
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {version!r}")
    spec = None
    if d.get("net_spec"):
        ns = dict(d["net_spec"])
        ns["hidden_layers"] = tuple(ns["hidden_layers"])
        spec = NetSpec(**ns)
    train = TrainConfig(**d["train_config"]) if d.get("train_config") else None
    scaler = Scaler.from_dict(d["scaler"]) if d.get("scaler") else None
    return {"model": _model_from_dict(d["model"], spec), "net_spec": spec,
            "train_config": train, "scaler": scaler, "extra": d.get("extra", {})}
