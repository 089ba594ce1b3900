import numpy as np
import pytest

from amoclab import build_ar, build_pi, fit_apply_scaler, scenario, split_chrono

# lines recorded by the acceptance suite, echoed after the run
ACCEPTANCE_LINES = []


def record(line):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def traj_cache():
    cache = {}

    def get(sid):
        if sid not in cache:
            cache[sid] = scenario(sid).integrate()
        return cache[sid]

    return get


@pytest.fixture(scope="session")
def f1_traj(traj_cache):
    return traj_cache("F1")


@pytest.fixture(scope="session")
def f1_pi(f1_traj):
    ds = build_pi(f1_traj)
    split, scaler = fit_apply_scaler(split_chrono(ds))
    return ds, split, scaler


@pytest.fixture(scope="session")
def f1_ar(f1_traj):
    ds = build_ar(f1_traj)
    split, scaler = fit_apply_scaler(split_chrono(ds))
    return ds, split, scaler


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
