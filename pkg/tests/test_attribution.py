import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amoclab.attribution import (AttributionMap, AttrMethod, Baseline, BaselinePolicy,
                                 attribute_map, deeplift, deeplift_batch, make_baseline,
                                 plausibility_report, shapley_exact, shapley_exact_batch,
                                 shapley_sampled, shapley_sampled_scores)
from amoclab.datagen import Dataset, Mode
from amoclab.errors import AttributionError, ConfigError
from amoclab.neural import BnnParams, Ensemble, MlpParams, NetSpec, init_mlp, init_rnn, predict
from amoclab.neural.rnn import predict_rnn


def _linear_net(w, b=0.0):
    w = np.asarray(w, dtype=float)
    return MlpParams([w[:, None]], [np.array([b])])


def _random_net(rng, d=4, act="relu"):
    p = init_mlp(NetSpec(d, (16, 16), act), rng)
    return p.with_arrays([a + 0.1 * rng.normal(size=a.shape) for a in p.arrays()])


def test_baselines():
    x = np.array([[1.0, 2.0], [3.0, 6.0]])
    assert np.array_equal(make_baseline("train_mean", train_features=x).x0, [2.0, 4.0])
    assert np.array_equal(make_baseline("zeros", dim=3).x0, np.zeros(3))
    assert make_baseline("custom", custom=[1, 2]).policy is BaselinePolicy.CUSTOM
    with pytest.raises(ConfigError):
        make_baseline("train_mean")
    with pytest.raises(ConfigError):
        Baseline([np.nan])


def test_linear_model_closed_form():
    w = np.array([2.0, -1.0, 0.5])
    net = _linear_net(w, 3.0)
    x, x0 = np.array([1.0, 2.0, -4.0]), np.array([0.5, 0.0, 1.0])
    expect = w * (x - x0)
    bl = Baseline(x0)
    assert np.allclose(deeplift(net, x, bl).scores, expect, rtol=1e-14)
    assert np.allclose(shapley_exact(net, x, bl).scores, expect, rtol=1e-14)
    assert np.allclose(shapley_sampled(net, x, bl, repeats=3).scores, expect, rtol=1e-12)


def test_shapley_product_example():
    f = lambda v: v[:, 0] * v[:, 1]
    phi = shapley_exact_batch(f, np.array([1.0, 1.0]), np.zeros(2))[0]
    assert np.allclose(phi, [0.5, 0.5])
    f3 = lambda v: v[:, 0] * v[:, 1] * v[:, 2]
    phi = shapley_exact_batch(f3, np.array([2.0, 1.0, 3.0]), np.zeros(3))[0]
    assert np.allclose(phi, [2.0, 2.0, 2.0])


@settings(deadline=None, max_examples=30)
@given(seed=st.integers(0, 2**31))
def test_completeness_all_methods(seed):
    rng = np.random.default_rng(seed)
    net = _random_net(rng, act="relu" if seed % 2 else "tanh")
    x, x0 = rng.normal(size=4), rng.normal(size=4)
    gap = predict(net, x) - predict(net, x0)
    bl = Baseline(x0)
    tol = 1e-9 * max(1.0, abs(gap))
    assert abs(deeplift(net, x, bl).scores.sum() - gap) < tol
    assert abs(shapley_exact(net, x, bl).scores.sum() - gap) < tol
    assert abs(shapley_sampled(net, x, bl, repeats=2, seed=seed).scores.sum() - gap) < tol


def test_dummy_feature_scores_zero(rng):
    net = _random_net(rng)
    net.weights[0][2, :] = 0.0
    x, bl = rng.normal(size=4), Baseline(rng.normal(size=4))
    assert deeplift(net, x, bl).scores[2] == 0.0
    assert abs(shapley_exact(net, x, bl).scores[2]) < 1e-14
    assert abs(shapley_sampled(net, x, bl, repeats=2).scores[2]) < 1e-14


def test_symmetric_features_share_credit():
    f = lambda v: np.tanh(v[:, 0] + v[:, 1]) + v[:, 2] ** 2
    phi = shapley_exact_batch(f, np.array([0.7, 0.7, 1.0]), np.zeros(3))[0]
    assert phi[0] == pytest.approx(phi[1], rel=1e-12)


def test_input_equal_to_baseline_gives_zero(rng):
    net = _random_net(rng)
    x = rng.normal(size=4)
    assert np.all(deeplift(net, x, Baseline(x)).scores == 0)
    assert np.all(shapley_exact(net, x, Baseline(x)).scores == 0)


def test_sampled_converges_to_exact(rng):
    net = _random_net(rng, d=5, act="tanh")
    x, bl = rng.normal(size=5), Baseline(rng.normal(size=5))
    exact = shapley_exact(net, x, bl).scores
    few = shapley_sampled(net, x, bl, repeats=2, seed=3).scores
    many = shapley_sampled(net, x, bl, repeats=2000, seed=3).scores
    assert np.abs(many - exact).max() < np.abs(few - exact).max()
    assert np.abs(many - exact).max() < 0.02 * np.abs(exact).max()


def test_sampled_deterministic_per_seed(rng):
    f = lambda v: np.sin(v).sum(axis=1) * v[:, 0]
    x, x0 = rng.normal(size=6), np.zeros(6)
    a = shapley_sampled_scores(f, x, x0, 5, 2, np.random.default_rng(1))
    b = shapley_sampled_scores(f, x, x0, 5, 2, np.random.default_rng(1))
    assert np.array_equal(a, b)


def test_ensemble_and_bnn_aggregation(rng):
    members = [_random_net(rng) for _ in range(3)]
    e = Ensemble(members)
    x, bl = rng.normal(size=(5, 4)), Baseline(np.zeros(4))
    expect = np.mean([deeplift_batch(m, x, bl) for m in members], axis=0)
    assert np.allclose(deeplift_batch(e, x, bl), expect, rtol=1e-14)
    bnn = BnnParams.from_mlp(members[0], rho=-2.0)
    assert np.array_equal(deeplift_batch(bnn, x, bl), deeplift_batch(members[0], x, bl))


def test_rnn_deeplift_completeness(rng):
    p = init_rnn(6, rng)
    x, x0 = rng.normal(size=(4, 5)), rng.normal(size=5)
    phi = deeplift_batch(p, x, Baseline(x0))
    gap = predict_rnn(p, x) - predict_rnn(p, x0)
    assert np.allclose(phi.sum(axis=1), gap, rtol=1e-9, atol=1e-12)


def test_exact_limit():
    f = lambda v: v.sum(axis=1)
    with pytest.raises(ConfigError):
        shapley_exact_batch(f, np.ones(13), np.zeros(13))


def _dataset(d, n=6, names=None):
    rng = np.random.default_rng(0)
    names = names or tuple(f"x{i}" for i in range(d))
    return Dataset(rng.normal(size=(n, d)), np.zeros(n), names, Mode.PI, tau=np.arange(n) * 100.0)


def test_shapley_method_resolution():
    small, large = _dataset(3), _dataset(10)
    f = lambda v: v.sum(axis=1)
    a = attribute_map(f, small, AttrMethod.SHAPLEY, Baseline(np.zeros(3)))
    b = attribute_map(f, large, "shapley", Baseline(np.zeros(10)), repeats=2)
    assert a.method is AttrMethod.SHAPLEY_EXACT and b.method is AttrMethod.SHAPLEY_SAMPLED
    assert np.allclose(b.scores, large.features)


def test_attribute_map_shapes_and_checks(rng):
    ds = _dataset(4)
    net = _random_net(rng)
    m = attribute_map(net, ds, "deeplift", Baseline(np.zeros(4)), model_id="n1")
    assert m.scores.shape == (6, 4) and np.array_equal(m.tau, ds.tau)
    assert m.meta["aggregation"] == "single network"
    with pytest.raises(ConfigError):
        attribute_map(net, _dataset(3), "deeplift", Baseline(np.zeros(3)))
    with pytest.raises(ConfigError):
        attribute_map(net, ds, "deeplift", Baseline(np.zeros(3)))


def test_nonfinite_scores_raise_with_index():
    ds = _dataset(10)

    def f(v):
        out = v.sum(axis=1)
        out[np.abs(v[:, 0] - ds.features[3, 0]) < 1e-15] = np.nan
        return out

    with pytest.raises(AttributionError) as err:
        attribute_map(f, ds, "shapley_sampled", Baseline(np.zeros(10)), repeats=1)
    assert err.value.index == 3


def test_map_csv_roundtrip(tmp_path, rng):
    ds = _dataset(4, names=("ΔS", "F_s", "a", "b"))
    m = attribute_map(_random_net(rng), ds, "shapley_sampled", Baseline(np.zeros(4)), seed=2,
                      repeats=3, model_id="abc")
    m.to_csv(tmp_path / "m.csv")
    back = AttributionMap.from_csv(tmp_path / "m.csv")
    assert np.array_equal(back.scores, m.scores) and np.array_equal(back.tau, m.tau)
    assert back.feature_names == m.feature_names and back.method is m.method
    assert back.model_id == "abc" and back.meta["repeats"] == 3


def test_plausibility_report():
    scores = np.array([[0.5, -0.4, 0.1, 0.0, 0.2, 0.1], [0.7, -0.6, 0.0, 0.1, 0.1, 0.2]])
    m = AttributionMap(scores, ("S1", "S2", "T1", "T2", "F_s", "F_t"), "deeplift")
    r = plausibility_report(m)
    assert r["salinity_dominant"] is True and r["polarity_opposed"] is True
    assert r["salinity_mean_abs"] == pytest.approx(0.55)
    flipped = AttributionMap(scores[:, ::-1], ("S1", "S2", "T1", "T2", "F_s", "F_t"), "deeplift")
    assert plausibility_report(flipped)["salinity_dominant"] is False
    std = AttributionMap(np.array([[1.0, 0.1]]), ("ΔS", "F_s"), "deeplift")
    assert plausibility_report(std)["polarity_opposed"] is None
    with pytest.raises(ConfigError):
        plausibility_report(std, Mode.AR)
    with pytest.raises(ConfigError):
        plausibility_report(AttributionMap(np.ones((1, 2)), ("a", "b"), "deeplift"))
