import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from amoclab.cli import main
from amoclab.datagen import Mode
from amoclab.errors import ConfigError, StageError
from amoclab.experiment import (Arch, ExperimentConfig, grid_cells, read_experiment_file,
                                run_experiment, run_grid, sha256_file, sweep_bnn_prior)

TINY = ExperimentConfig(epochs=3, hidden_layers=(8,), ensemble_size=2, bnn_samples=5,
                        shapley_repeats=2, rnn_hidden=4)


def test_grid_cells_count():
    sids = ["F1", "F2", "F3", "F4", "F5", "F6"]
    assert len(grid_cells(sids, ["PI", "AR"], ["MLP", "DE", "BNN"])) == 36
    with_rnn = grid_cells(sids, ["PI", "AR"], ["MLP", "DE", "BNN", "RNN"])
    assert len(with_rnn) == 42
    assert all(m is Mode.AR for _, m, a in with_rnn if a is Arch.RNN)


def test_config_validation_and_file(tmp_path):
    with pytest.raises(ConfigError):
        replace(TINY, architecture="RNN", feature_mode="PI").validate()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"nope": 1})
    path = tmp_path / "e.ini"
    path.write_text("[experiment]\nscenario = f2\narchitecture = de\nhidden_layers = 8,8\n"
                    "kl_weight = none\nlr = 0.01\n[overrides]\nfs.amplitude = 1e11\n")
    cfg = read_experiment_file(path)
    assert cfg.scenario == "F2" and cfg.architecture is Arch.DE
    assert cfg.hidden_layers == (8, 8) and cfg.kl_weight is None and cfg.lr == 0.01
    assert cfg.overrides == {"fs.amplitude": "1e11"}


@pytest.mark.parametrize("mode,arch", [("PI", "MLP"), ("AR", "DE"), ("PI", "BNN"), ("AR", "RNN")])
def test_run_experiment_bundle(tmp_path, mode, arch):
    cfg = replace(TINY, scenario="F1", feature_mode=mode, architecture=arch)
    b = run_experiment(cfg, tmp_path)
    names = {f["file"] for f in b.manifest["files"]}
    stem = f"F1_{mode}_{arch}"
    for f in ("config.json", "trajectory.csv", "dataset.csv", "dataset_train.csv",
              "dataset_test.csv", "checkpoint.json", "loss_curve.csv",
              "attribution_deeplift.csv", "attribution_shapley.csv", f"{stem}.csv", f"{stem}.json"):
        assert f in names
    for f in b.manifest["files"]:
        assert sha256_file(tmp_path / f["file"]) == f["sha256"]
    assert {"test_mse", "skill_vs_mean", "near_constant", "model_id"} <= set(b.metrics)
    if mode == "PI":
        summary = json.loads((tmp_path / f"{stem}.json").read_text())
        assert "salinity_dominant" in summary["plausibility_deeplift"]


def test_run_is_deterministic(tmp_path):
    cfg = replace(TINY, scenario="F2", feature_mode="AR", architecture="BNN")
    a = run_experiment(cfg, tmp_path / "a").manifest
    b = run_experiment(cfg, tmp_path / "b").manifest
    assert a == b


def test_stage_failure_reports_partial_manifest(tmp_path):
    cfg = replace(TINY, overrides={"grid.dt": "5000"})
    with pytest.raises(StageError) as err:
        run_experiment(cfg, tmp_path)
    assert err.value.stage == "simulate"
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["status"] == "failed" and m["failed_stage"] == "simulate"
    assert [f["file"] for f in m["files"]] == ["config.json"]


def test_small_grid_and_summary(tmp_path):
    rows = run_grid(["F1"], ["PI", "AR"], ["MLP", "RNN"], base=TINY, out_dir=tmp_path)
    assert [(r["mode"], r["arch"]) for r in rows] == [("PI", "MLP"), ("AR", "MLP"), ("AR", "RNN")]
    with open(tmp_path / "summary.csv") as fh:
        summary = list(csv.DictReader(fh))
    assert len(summary) == 3 and all(r["status"] == "ok" for r in summary)
    empty = run_grid([], base=TINY, out_dir=tmp_path / "empty")
    assert empty == [] and (tmp_path / "empty" / "summary.csv").read_text().startswith("scenario")


def test_sweep_rejects_nonpositive_sigma(tmp_path):
    with pytest.raises(ConfigError):
        sweep_bnn_prior(TINY, [0.1, 0.0], tmp_path)


def test_sweep_writes_table(tmp_path):
    cfg = replace(TINY, attribution=())
    rows = sweep_bnn_prior(cfg, [0.1, 1e-3], tmp_path)
    assert [r["sigma"] for r in rows] == [0.1, 1e-3]
    assert (tmp_path / "F1_PI_BNN_sigma_sweep.csv").exists()


# ---- CLI -------------------------------------------------------------------

def test_cli_pipeline(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["simulate", "--scenario", "F1", "--set", "fs.slope=2e11", "--out", out]) == 0
    traj = tmp_path / "F1_trajectory.csv"
    assert traj.exists() and (tmp_path / "F1_scenario.ini").exists()
    sim2 = tmp_path / "again"
    assert main(["simulate", "--config", str(tmp_path / "F1_scenario.ini"), "--out", str(sim2)]) == 0
    assert (sim2 / "F1_trajectory.csv").read_bytes() == traj.read_bytes()

    assert main(["dataset", "--trajectory", str(traj), "--mode", "AR", "--out", out]) == 0
    data = str(tmp_path / "F1_AR_dataset.csv")
    assert main(["train", "--data", data, "--arch", "RNN", "--epochs", "2", "--rnn-hidden", "4",
                 "--out", out]) == 0
    ckpt = str(tmp_path / "checkpoint.json")
    assert main(["evaluate", "--checkpoint", ckpt, "--data", data, "--out", out]) == 0
    assert (tmp_path / "F1_AR_RNN.json").exists()
    assert main(["attribute", "--checkpoint", ckpt, "--data", data, "--method", "deeplift",
                 "--out", out]) == 0
    assert (tmp_path / "attribution_deeplift.csv").exists()


def test_cli_run_and_errors(tmp_path, capsys):
    rc = main(["run", "--scenario", "F1", "--mode", "PI", "--arch", "MLP", "--epochs", "2",
               "--hidden-layers", "8", "--attribution", "deeplift", "--seed", "3",
               "--out", str(tmp_path / "r")])
    assert rc == 0
    cfg = json.loads((tmp_path / "r" / "config.json").read_text())["experiment"]
    assert cfg["seed"] == 3 and cfg["hidden_layers"] == [8]
    capsys.readouterr()
    assert main(["run", "--mode", "PI", "--arch", "RNN", "--out", str(tmp_path / "x")]) == 2
    assert "error: stage" in capsys.readouterr().err
    assert main(["sweep-bnn", "--sigmas", "0.1,0", "--out", str(tmp_path / "s")]) == 2


def test_cli_config_file_with_flag_override(tmp_path):
    ini = tmp_path / "e.ini"
    ini.write_text("[experiment]\nscenario = F2\nepochs = 2\nhidden_layers = 8\n"
                   "attribution = deeplift\n")
    assert main(["run", "--config", str(ini), "--epochs", "1", "--out", str(tmp_path / "r")]) == 0
    cfg = json.loads((tmp_path / "r" / "config.json").read_text())["experiment"]
    assert cfg["scenario"] == "F2" and cfg["epochs"] == 1
    curve = np.loadtxt(tmp_path / "r" / "loss_curve.csv", delimiter=",", skiprows=1, ndmin=2)
    assert curve.shape[0] == 1
