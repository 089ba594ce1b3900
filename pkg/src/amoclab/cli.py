"""Command-line front end.

    amoclab simulate   --scenario F1 --out runs/
    amoclab dataset    --trajectory runs/F1_trajectory.csv --mode PI --out runs/
    amoclab train      --data runs/F1_PI_dataset.csv --arch MLP --out runs/
    amoclab attribute  --checkpoint runs/checkpoint.json --data runs/F1_PI_dataset.csv
    amoclab evaluate   --checkpoint runs/checkpoint.json --data runs/F1_PI_dataset.csv
    amoclab run        --scenario F2 --mode AR --arch DE --seed 1 --out runs/F2
    amoclab grid       --scenarios F1,F2 --modes PI,AR --archs MLP,DE,BNN --out runs/grid
    amoclab sweep-bnn  --scenario F1 --mode PI --out runs/sweep

Experiment flags mirror ``ExperimentConfig`` fields (``--hidden-layers 64,64``,
``--ensemble-size 10`` ...); ``--config`` reads an INI file whose values the
flags then override.  Failures exit with status 2 and name the stage.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields, replace
from pathlib import Path

from . import __version__
from .attribution import attribute_map, make_baseline
from .boxmodel import Trajectory
from .datagen import (Mode, Split, build_ar, build_pi, fit_apply_scaler, read_dataset,
                      split_chrono, write_dataset)
from .errors import StageError
from .evaluation import PredictionSeries, write_report
from .experiment import (DEFAULT_SIGMAS, MAIN_ARCHS, Arch, ExperimentConfig, predict_model,
                         read_experiment_file, run_experiment, run_grid, scaled_full, sha256_file,
                         sweep_bnn_prior, train_model, _write_curves)
from .forcing import read_scenario_file, scenario, write_scenario_file
from .neural.checkpoint import load_checkpoint, save_checkpoint

_SKIP = {"overrides", "out_dir", "seed", "scenario", "feature_mode", "architecture"}


def _add_experiment_flags(p):
    p.add_argument("--config", help="INI experiment file ([experiment] and [overrides] sections)")
    p.add_argument("--scenario", help="scenario id F1..F6")
    p.add_argument("--mode", "--feature-mode", dest="feature_mode", choices=["PI", "AR"])
    p.add_argument("--arch", "--architecture", dest="architecture",
                   type=str.upper, choices=[a.value for a in Arch])
    p.add_argument("--set", action="append", default=[], metavar="SECTION.FIELD=VALUE",
                   help="scenario override, repeatable")
    for f in fields(ExperimentConfig):
        if f.name not in _SKIP:
            p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None)
    _add_common(p)


def _add_common(p):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")


def _parse_sets(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ValueError(f"--set expects SECTION.FIELD=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _experiment_config(args) -> ExperimentConfig:
    cfg = read_experiment_file(args.config) if getattr(args, "config", None) else ExperimentConfig()
    given = {f.name: getattr(args, f.name) for f in fields(ExperimentConfig)
             if f.name not in ("overrides", "out_dir") and getattr(args, f.name, None) is not None}
    if given:
        typed = ExperimentConfig.from_dict({k: str(v) for k, v in given.items()})
        cfg = replace(cfg, **{k: getattr(typed, k) for k in given})
    sets = _parse_sets(getattr(args, "set", []))
    if sets:
        cfg = replace(cfg, overrides={**cfg.overrides, **sets})
    if getattr(args, "out", None):
        cfg = replace(cfg, out_dir=args.out)
    return cfg


def _print(obj):
    print(json.dumps(obj, indent=2, default=str))


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_simulate(args):
    if args.config:
        sc = read_scenario_file(args.config)
        overrides = _changed(sc)
    else:
        sc = scenario(args.scenario or "F1")
        overrides = {}
    sets = _parse_sets(args.set)
    if sets:
        sc = scenario(sc.id, {**overrides, **sets})
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    traj = sc.integrate(args.method)
    traj_path = out / f"{sc.id}_trajectory.csv"
    traj.to_csv(traj_path)
    ini_path = out / f"{sc.id}_scenario.ini"
    write_scenario_file(sc, ini_path)
    _print({"trajectory": str(traj_path), "scenario": str(ini_path), "n_samples": len(traj.tau)})


def _changed(sc):
    """Overrides that rebuild ``sc`` from its default setup."""
    ref = scenario(sc.id).resolved()
    return {k: v for k, v in sc.resolved().items()
            if not k.startswith("scenario.") and ref.get(k) != v and v is not None}


def cmd_dataset(args):
    traj = Trajectory.from_csv(args.trajectory)
    mode = Mode(args.mode)
    ds = build_pi(traj) if mode is Mode.PI else build_ar(traj, args.window)
    raw = split_chrono(ds, args.ratio)
    _, scaler = fit_apply_scaler(raw)
    sid = args.scenario or Path(args.trajectory).stem.split("_")[0]
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{sid}_{mode.value}_dataset.csv"
    side = write_dataset(ds, path, scaler, {"boundary_index": raw.boundary_index, "scenario": sid})
    _print({"dataset": str(path), "meta": str(side), "n_samples": len(ds),
            "boundary_index": raw.boundary_index})


def _load_split(path):
    ds, _, meta = read_dataset(path)
    if meta.get("boundary_index") is None:
        raise ValueError(f"{path}: sidecar lacks boundary_index; build it with 'dataset'")
    b = int(meta["boundary_index"])
    raw = Split(ds.rows(slice(0, b)), ds.rows(slice(b, len(ds))), b)
    split, scaler = fit_apply_scaler(raw)
    return ds, raw, split, scaler, meta


def cmd_train(args):
    cfg = _experiment_config(args)
    ds, raw, split, scaler, meta = _load_split(args.data)
    cfg = replace(cfg, feature_mode=ds.mode, scenario=meta.get("scenario", cfg.scenario)).validate()
    model, spec, curves = train_model(cfg, split)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    ckpt = save_checkpoint(out / "checkpoint.json", model, spec, cfg.train_config(), scaler,
                           {"architecture": cfg.architecture.value, "prior_std": cfg.prior_std,
                            "mode": ds.mode.value, "scenario": cfg.scenario,
                            "bnn_samples": cfg.bnn_samples})
    _write_curves(out / "loss_curve.csv", curves)
    _print({"checkpoint": str(ckpt), "final_test_mse": [c.test_mse[-1] for c in curves]})


def _load_model_and_data(args):
    ck = load_checkpoint(args.checkpoint)
    ds, raw, split, scaler, meta = _load_split(args.data)
    full = scaled_full(ds, ck["scaler"] or scaler)
    return ck, ds, raw, split, full, meta


def cmd_attribute(args):
    ck, ds, raw, split, full, meta = _load_model_and_data(args)
    baseline = make_baseline(args.baseline, dim=ds.n_features, train_features=split.train.features)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else 0
    written = []
    for meth in args.method.split(","):
        amap = attribute_map(ck["model"], full, meth.strip(), baseline, seed=seed,
                             repeats=args.repeats, model_id=sha256_file(args.checkpoint)[:16])
        amap.meta["split_boundary"] = raw.boundary_index
        written.append(str(amap.to_csv(out / f"attribution_{meth.strip()}.csv")))
    _print({"maps": written})


def cmd_evaluate(args):
    ck, ds, raw, split, full, meta = _load_model_and_data(args)
    extra = ck["extra"]
    seed = args.seed if args.seed is not None else 0
    mean, std = predict_model(ck["model"], full.features, int(extra.get("bnn_samples", 100)), seed)
    ps = PredictionSeries(ds.tau, ds.targets, mean, std, raw.boundary_index)
    paths = write_report(ps, args.out or ".", meta.get("scenario", "F?"), ds.mode.value,
                         extra.get("architecture", "model"), args.threshold, args.window)
    _print({"report": [str(p) for p in paths]})


def cmd_run(args):
    cfg = _experiment_config(args)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    b = run_experiment(cfg)
    _print({"out_dir": str(b.out_dir), "metrics": b.metrics, "files": len(b.manifest["files"])})


def cmd_grid(args):
    base = _experiment_config(args)
    scen = [s for s in (args.scenarios or "").split(",") if s.strip()]
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    archs = [a.strip().upper() for a in args.archs.split(",") if a.strip()]
    rows = run_grid(scen, modes, archs, seed=args.seed if args.seed is not None else base.seed,
                    base=base, out_dir=base.out_dir)
    failed = [r for r in rows if r["status"] != "ok"]
    _print({"cells": len(rows), "failed": len(failed),
            "summary": str(Path(base.out_dir) / "summary.csv")})
    return 1 if failed else 0


def cmd_sweep(args):
    cfg = _experiment_config(args)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    sigmas = [float(s) for s in args.sigmas.split(",")] if args.sigmas else list(DEFAULT_SIGMAS)
    rows = sweep_bnn_prior(cfg, sigmas)
    _print(rows)


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="amoclab", description="AMOC box model and network comparison")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a scenario and write its trajectory")
    p.add_argument("--scenario")
    p.add_argument("--config", help="INI scenario file")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.FIELD=VALUE")
    p.add_argument("--method", default="rk4", choices=["rk4", "euler"])
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dataset", help="build a PI or AR dataset from a trajectory CSV")
    p.add_argument("--trajectory", required=True)
    p.add_argument("--mode", choices=["PI", "AR"], default="PI")
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--ratio", type=float, default=0.7)
    p.add_argument("--scenario", help="scenario id recorded in the sidecar")
    _add_common(p)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", help="train an architecture on a dataset CSV")
    p.add_argument("--data", required=True)
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attribute", help="attribution maps for a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", default="deeplift,shapley")
    p.add_argument("--baseline", default="train_mean", choices=["train_mean", "zeros"])
    p.add_argument("--repeats", type=int, default=20)
    _add_common(p)
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("evaluate", help="metrics, bias series and tipping report")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--threshold", type=float, default=0.3)
    p.add_argument("--window", type=int, default=10)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full experiment bundle")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("grid", help="scenario x mode x architecture grid")
    p.add_argument("--scenarios", default="F1,F2,F3,F4,F5,F6")
    p.add_argument("--modes", default="PI,AR")
    p.add_argument("--archs", default=",".join(a.value for a in MAIN_ARCHS))
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("sweep-bnn", help="BNN prior standard deviation sweep")
    p.add_argument("--sigmas", help="comma separated; default 0.1,1e-2,...,1e-6")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = args.func(args)
    except StageError as exc:
        print(f"error: stage '{exc.stage}' failed: {exc.cause}", file=sys.stderr)
        return 2
    except Exception as exc:  # surface the subcommand as the stage
        print(f"error: stage '{args.command}' failed: {exc}", file=sys.stderr)
        return 2
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
