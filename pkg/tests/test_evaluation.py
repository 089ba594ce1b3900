import json

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from amoclab.errors import ConfigError
from amoclab.evaluation import (EventKind, PredictionSeries, TippingEvent, bias_series,
                                detect_tipping, metrics, near_far_bias, spike_report, write_report)


def test_metrics_example():
    ps = PredictionSeries(None, [1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 5.0, 4.0], split_boundary=2)
    m = metrics(ps)
    assert m["mse"] == 1.0 and m["mae"] == 0.5
    assert m["test_mse"] == 2.0 and m["test_mae"] == 1.0
    assert m["skill_vs_mean"] == pytest.approx(1 - 2.0 / 0.25)
    assert np.array_equal(bias_series(ps), [0, 0, 2, 0])
    with pytest.raises(ConfigError):
        metrics(PredictionSeries(None, [1.0, 2.0], [1.0, 2.0], split_boundary=2))


def test_series_validation():
    with pytest.raises(ConfigError):
        PredictionSeries(None, [1.0, 2.0], [1.0])
    with pytest.raises(ConfigError):
        PredictionSeries(None, [1.0], [1.0], q_std=[-1.0])
    with pytest.raises(ConfigError):
        TippingEvent(3, "breakdown", 0.0)


def test_step_down_is_breakdown():
    q = np.r_[np.full(10, 1.0), np.full(10, 0.0)]
    ev = detect_tipping(q)
    assert ev == [TippingEvent(10, EventKind.BREAKDOWN, 1.0)]


def test_return_to_dominant_level_is_recovery():
    q = np.r_[np.full(5, 1.0), np.full(15, 0.0)]
    (ev,) = detect_tipping(q)
    assert ev.kind is EventKind.RECOVERY and ev.tau_index == 5


def test_consecutive_jumps_merge():
    q = np.array([0.0, 0.0, 0.0, 0.4, 1.0, 1.0, 1.0])
    (ev,) = detect_tipping(q)
    assert ev.tau_index == 4 and ev.magnitude == pytest.approx(1.0)


def test_smooth_series_has_no_events():
    assert detect_tipping(np.linspace(0, 1, 200)) == []
    assert detect_tipping(np.ones(10)) == []
    with pytest.raises(ConfigError):
        detect_tipping([1.0, 2.0])
    with pytest.raises(ConfigError):
        detect_tipping(np.arange(5.0), threshold_fraction=0.0)


@given(a=st.floats(-1e11, 1e11), b=st.floats(-1e11, 1e11), seed=st.integers(0, 1000))
def test_detection_is_affine_invariant(a, b, seed):
    assume(abs(a) > 1e-3)
    rng = np.random.default_rng(seed)
    q = np.cumsum(rng.normal(size=40)) + 8 * (np.arange(40) > rng.integers(5, 35))
    base = detect_tipping(q)
    moved = detect_tipping(a * q + b)
    assert [(e.tau_index, e.kind) for e in base] == [(e.tau_index, e.kind) for e in moved]


def test_spike_and_near_far():
    q_true = np.r_[np.zeros(30), np.ones(30)]
    bias = np.full(60, 0.01)
    bias[29:32] = 0.5
    ps = PredictionSeries(None, q_true, q_true + bias, q_std=np.abs(bias), split_boundary=40)
    events = detect_tipping(q_true)
    (rep,) = spike_report(ps, events, window=3)
    assert rep["tau_index"] == 30 and rep["max_abs_bias"] == 0.5 and rep["max_q_std"] == 0.5
    near, far = near_far_bias(ps, events, window=3)
    assert near == 0.5 and far == pytest.approx(0.01)


def test_csv_and_report(tmp_path):
    rng = np.random.default_rng(0)
    q = np.r_[np.zeros(20), np.ones(20)] + 0.01 * rng.normal(size=40)
    ps = PredictionSeries(np.arange(40) * 100.0, q, q + 0.1, q_std=np.full(40, 0.2),
                          split_boundary=28)
    back = PredictionSeries.from_csv(ps.to_csv(tmp_path / "s.csv"))
    for k in ("tau", "q_true", "q_pred", "q_std"):
        assert np.array_equal(getattr(back, k), getattr(ps, k))
    assert back.split_boundary == 28
    csv_path, json_path = write_report(ps, tmp_path / "r", "F2", "PI", "MLP")
    assert csv_path.name == "F2_PI_MLP.csv" and json_path.name == "F2_PI_MLP.json"
    summary = json.loads(json_path.read_text())
    assert summary["events"][0]["tau_index"] == 20
    assert summary["metrics"]["test_mae"] == pytest.approx(0.1)
