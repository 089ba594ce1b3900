import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amoclab.boxmodel import Trajectory, Variant
from amoclab.datagen import (Dataset, Mode, build_ar, build_pi, concat, fit_apply_scaler,
                             fit_scaler, read_dataset, split_chrono, write_dataset)
from amoclab.errors import ConfigError


def _toy_traj(q):
    q = np.asarray(q, dtype=float)
    n = len(q)
    tau = np.arange(n, dtype=float)
    return Trajectory(Variant.STANDARD, tau, np.linspace(-1, 1, n), np.zeros(n),
                      np.linspace(0, 2, n), np.zeros(n), q)


def test_ar_example():
    ds = build_ar(_toy_traj([1, 2, 3, 4, 5]), window=2)
    assert np.array_equal(ds.features, [[1, 2], [2, 3], [3, 4]])
    assert np.array_equal(ds.targets, [3, 4, 5])
    assert ds.feature_names == ("τ−2", "τ−1")
    assert np.array_equal(ds.tau, [2, 3, 4])


@given(q=st.lists(st.floats(-1e10, 1e10), min_size=3, max_size=60), w=st.integers(1, 10))
def test_ar_rows_reconstruct_series(q, w):
    if len(q) <= w:
        with pytest.raises(ConfigError):
            build_ar(_toy_traj(q), w)
        return
    ds = build_ar(_toy_traj(q), w)
    assert len(ds) == len(q) - w
    for i in range(len(ds)):
        assert np.array_equal(ds.features[i], q[i:i + w])
        assert ds.targets[i] == q[i + w]


def test_pi_columns(f1_traj, traj_cache):
    ds = build_pi(f1_traj)
    assert ds.feature_names == ("ΔS", "F_s")
    assert np.array_equal(ds.targets, f1_traj.q)
    ext = build_pi(traj_cache("F4"))
    assert ext.feature_names == ("S1", "S2", "T1", "T2", "F_s", "F_t")
    assert ext.n_features == 6 and len(ext) == 1501


def test_pi_with_temperature_forcing_keeps_delta_t():
    tr = _toy_traj(np.arange(20.0))
    tr = Trajectory(tr.variant, tr.tau, tr.delta_s, tr.delta_t, tr.fs, np.ones(20), tr.q)
    assert build_pi(tr).feature_names == ("ΔS", "ΔT", "F_s", "F_t")


def test_pi_extended_needs_absolute_columns(f1_traj):
    with pytest.raises(ConfigError):
        build_pi(f1_traj, Variant.EXTENDED)


def test_split_sizes():
    for n, expect in ((10, 7), (15, 11), (1501, 1051), (1491, 1044)):
        sp = split_chrono(build_ar(_toy_traj(np.arange(n + 1.0)), 1))
        assert sp.boundary_index == expect
        assert len(sp.train) + len(sp.test) == n
        assert sp.train.targets[-1] < sp.test.targets[0]
    with pytest.raises(ConfigError):
        split_chrono(build_ar(_toy_traj(np.arange(6.0)), 1))


def test_split_deterministic(f1_pi):
    ds, split, _ = f1_pi
    again = split_chrono(ds)
    assert np.array_equal(again.train.features, split_chrono(ds).train.features)
    assert again.boundary_index == split.boundary_index


def test_scaler_uses_train_statistics(f1_pi):
    ds, split, scaler = f1_pi
    raw = split_chrono(ds)
    assert np.allclose(split.train.features.mean(axis=0), 0, atol=1e-12)
    assert np.allclose(split.train.features.std(axis=0), 1, atol=1e-12)
    assert np.allclose(scaler.inverse_transform(split.test.features), raw.test.features,
                       rtol=1e-12)
    assert np.array_equal(split.test.targets, raw.test.targets)


def test_constant_feature_rejected():
    x = np.column_stack([np.arange(20.0), np.ones(20)])
    ds = Dataset(x, np.arange(20.0), ("a", "b"), Mode.PI)
    with pytest.raises(ConfigError):
        fit_scaler(ds)


def test_dataset_validation():
    with pytest.raises(ConfigError):
        Dataset(np.zeros((3, 2)), np.zeros(4), ("a", "b"), Mode.PI)
    with pytest.raises(ConfigError):
        Dataset(np.zeros((3, 2)), np.zeros(3), ("a",), Mode.PI)
    with pytest.raises(ConfigError):
        Dataset(np.zeros((3, 2)), np.zeros(3), ("a", "b"), Mode.AR, window=3)


@settings(deadline=None, max_examples=10)
@given(w=st.integers(1, 12))
def test_file_roundtrip(tmp_path_factory, f1_traj, w):
    path = tmp_path_factory.mktemp("ds") / "d.csv"
    ds = build_ar(f1_traj, w)
    split, scaler = fit_apply_scaler(split_chrono(ds))
    write_dataset(split.train, path, scaler)
    back, sc, meta = read_dataset(path)
    assert np.array_equal(back.features, split.train.features)
    assert np.array_equal(back.targets, split.train.targets)
    assert back.mode is Mode.AR and back.window == w and meta["n_samples"] == len(back)
    assert np.array_equal(sc.mean, scaler.mean) and np.array_equal(sc.std, scaler.std)


def test_concat_inverts_split(f1_pi):
    ds = f1_pi[0]
    sp = split_chrono(ds)
    whole = concat([sp.train, sp.test])
    assert np.array_equal(whole.features, ds.features)
    assert np.array_equal(whole.tau, ds.tau)
