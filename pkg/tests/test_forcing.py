import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from amoclab.boxmodel import BoxState, DeltaState, DensityLaw, Variant
from amoclab.errors import ConfigError, DomainError
from amoclab.forcing import (EOS80_INITIAL, FORCING_SCALE, SCENARIO_IDS, ForcingKind, ForcingSpec,
                             eval_forcing, read_scenario_file, scenario, write_scenario_file)

TMAX = 150_000.0


def test_zero_and_linear_endpoints():
    assert eval_forcing(ForcingSpec(), 123.0, TMAX) == 0.0
    lin = ForcingSpec(ForcingKind.LINEAR, base=1.0, slope=3.0)
    assert eval_forcing(lin, 0.0, TMAX) == 1.0
    assert eval_forcing(lin, TMAX, TMAX) == 4.0
    assert eval_forcing(lin, TMAX / 2, TMAX) == pytest.approx(2.5)


def test_sinusoid_quarter_period():
    sp = ForcingSpec(ForcingKind.SINUSOID_STATIONARY, base=0.5, amplitude=2.0, period=100.0)
    assert eval_forcing(sp, 25.0, TMAX) == pytest.approx(2.5)
    assert eval_forcing(sp, 75.0, TMAX) == pytest.approx(-1.5)


def test_array_input():
    lin = ForcingSpec(ForcingKind.LINEAR, slope=1.0)
    out = eval_forcing(lin, np.array([0.0, TMAX]), TMAX)
    assert isinstance(out, np.ndarray) and np.array_equal(out, [0.0, 1.0])


@given(a=st.floats(-1e12, 1e12), b=st.floats(-1e12, 1e12), t1=st.floats(0, TMAX),
       t2=st.floats(0, TMAX))
def test_linear_is_affine_in_tau(a, b, t1, t2):
    sp = ForcingSpec(ForcingKind.LINEAR, base=a, slope=b)
    mid = eval_forcing(sp, (t1 + t2) / 2, TMAX)
    avg = (eval_forcing(sp, t1, TMAX) + eval_forcing(sp, t2, TMAX)) / 2
    assert mid == pytest.approx(avg, rel=1e-9, abs=1e-3)


def _rolling_amplitude(spec, period=2500.0):
    tau = np.arange(0.0, TMAX + 1, period / 50)
    f = eval_forcing(spec, tau, TMAX)
    w = 50
    windows = np.lib.stride_tricks.sliding_window_view(f, w)
    return (windows.max(axis=1) - windows.min(axis=1)) / 2


def test_stationary_rolling_amplitude_constant():
    amp = _rolling_amplitude(scenario("F2").fs)
    assert np.ptp(amp) < 1e-3 * amp.mean()


@given(growth=st.floats(0.0, 5.0))
def test_nonstationary_amplitude_nondecreasing(growth):
    sp = ForcingSpec(ForcingKind.SINUSOID_NONSTATIONARY, amplitude=1.0, period=2500.0,
                     amp_growth=growth)
    amp = _rolling_amplitude(sp)
    assert np.all(np.diff(amp) >= -1e-9 * (1 + growth))


def test_invalid_specs():
    with pytest.raises(ConfigError):
        ForcingSpec(ForcingKind.SINUSOID_STATIONARY, period=0.0)
    with pytest.raises(ConfigError):
        ForcingSpec(ForcingKind.SINUSOID_NONSTATIONARY, period=1.0, amp_growth=-1.0)
    with pytest.raises(DomainError):
        eval_forcing(ForcingSpec(), -1.0, TMAX)
    with pytest.raises(DomainError):
        eval_forcing(ForcingSpec(), TMAX + 1, TMAX)


def test_scenario_table():
    for sid in SCENARIO_IDS:
        sc = scenario(sid)
        if sid in ("F1", "F2", "F3"):
            assert sc.model.variant is Variant.STANDARD
            assert sc.model.density_law is DensityLaw.LINEAR
            assert sc.ft.kind is ForcingKind.ZERO
            assert isinstance(sc.initial, DeltaState)
        else:
            assert sc.model.variant is Variant.EXTENDED
            assert sc.model.density_law is DensityLaw.EOS80
            assert sc.ft == sc.fs
            assert sc.initial == EOS80_INITIAL
    assert scenario("F1").fs.kind is ForcingKind.LINEAR
    assert scenario("F2").fs.kind is ForcingKind.SINUSOID_STATIONARY
    assert scenario("f3").fs.kind is ForcingKind.SINUSOID_NONSTATIONARY
    assert scenario("F1").fs.slope == FORCING_SCALE


def test_overrides_and_errors():
    sc = scenario("F2", {"fs.amplitude": "1e11", "grid.dt": 4, "initial.delta_s": -5})
    assert sc.fs.amplitude == 1e11 and sc.grid.dt == 4.0 and sc.initial.delta_s == -5.0
    sc = scenario("F1", {"model.area": 1e8})
    assert sc.model.volume1 == pytest.approx(1e8 * 4000)
    with pytest.raises(ConfigError):
        scenario("F7")
    with pytest.raises(ConfigError):
        scenario("F1", {"fs.nope": 1})
    with pytest.raises(ConfigError):
        scenario("F1", {"nosection": 1})


def test_scenario_file_roundtrip(tmp_path):
    for sid in ("F3", "F6"):
        sc = scenario(sid, {"fs.amplitude": 1.5e11})
        path = tmp_path / f"{sid}.ini"
        write_scenario_file(sc, path)
        assert read_scenario_file(path) == sc


def test_short_scenario_file(tmp_path):
    path = tmp_path / "s.ini"
    path.write_text("[scenario]\nid = F4\n[initial]\ns2 = 15\n")
    sc = read_scenario_file(path)
    assert sc.initial == BoxState(12.0, 15.0, 1.0, 10.0)
    bad = tmp_path / "bad.ini"
    bad.write_text("[fs]\namplitude = 1\n")
    with pytest.raises(ConfigError):
        read_scenario_file(bad)
