"""Error metrics, bias series, tipping-event detection and spike tabulation."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigError


@dataclass
class PredictionSeries:
    tau: np.ndarray
    q_true: np.ndarray
    q_pred: np.ndarray
    q_std: Optional[np.ndarray] = None
    split_boundary: int = 0

    def __post_init__(self):
        self.q_true = np.asarray(self.q_true, dtype=float).reshape(-1)
        self.q_pred = np.asarray(self.q_pred, dtype=float).reshape(-1)
        n = len(self.q_true)
        self.tau = (np.arange(n, dtype=float) if self.tau is None
                    else np.asarray(self.tau, dtype=float).reshape(-1))
        self.q_std = (np.zeros(n) if self.q_std is None
                      else np.asarray(self.q_std, dtype=float).reshape(-1))
        if not (len(self.tau) == len(self.q_pred) == len(self.q_std) == n):
            raise ConfigError("tau, q_true, q_pred and q_std must have equal lengths")
        if np.any(self.q_std < 0):
            raise ConfigError("q_std must be nonnegative")
        if not 0 <= self.split_boundary <= n:
            raise ConfigError(f"split_boundary {self.split_boundary} outside [0, {n}]")

    def __len__(self):
        return len(self.q_true)

    def to_csv(self, path) -> Path:
        """tau, truth, mean, std, mean -/+ std band, bias and split label per row."""
        path = Path(path)
        bias = bias_series(self)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "q_true", "q_pred", "q_std", "q_lower", "q_upper", "bias", "split"])
            for i in range(len(self)):
                vals = (self.tau[i], self.q_true[i], self.q_pred[i], self.q_std[i],
                        self.q_pred[i] - self.q_std[i], self.q_pred[i] + self.q_std[i], bias[i])
                w.writerow([format(float(v), ".17g") for v in vals]
                           + ["train" if i < self.split_boundary else "test"])
        return path

    @classmethod
    def from_csv(cls, path) -> "PredictionSeries":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        col = lambda k: np.array([float(r[k]) for r in rows])
        boundary = sum(r["split"] == "train" for r in rows)
        return cls(col("tau"), col("q_true"), col("q_pred"), col("q_std"), boundary)


def bias_series(ps: PredictionSeries) -> np.ndarray:
    """Prediction minus truth."""
    return ps.q_pred - ps.q_true


def metrics(ps: PredictionSeries) -> dict:
    b = bias_series(ps)
    test = slice(ps.split_boundary, len(ps))
    if ps.split_boundary >= len(ps):
        raise ConfigError("the test segment is empty")
    test_mse = float(np.mean(b[test] ** 2))
    var = float(np.var(ps.q_true[test]))
    return {
        "mse": float(np.mean(b ** 2)),
        "mae": float(np.mean(np.abs(b))),
        "test_mse": test_mse,
        "test_mae": float(np.mean(np.abs(b[test]))),
        "skill_vs_mean": (1.0 - test_mse / var) if var > 0 else float("nan"),
    }


# --------------------------------------------------------------------------
# tipping events
# --------------------------------------------------------------------------

class EventKind(str, Enum):
    BREAKDOWN = "breakdown"
    RECOVERY = "recovery"


@dataclass(frozen=True)
class TippingEvent:
    tau_index: int  # first sample after the jump
    kind: EventKind
    magnitude: float

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))
        if not self.magnitude > 0:
            raise ConfigError("event magnitude must be positive")

    def to_dict(self) -> dict:
        return {"tau_index": self.tau_index, "kind": self.kind.value, "magnitude": self.magnitude}


def detect_tipping(q, threshold_fraction: float = 0.3) -> List[TippingEvent]:
    """Abrupt jumps larger than ``threshold_fraction`` of the series range.

    Runs of consecutive jumps merge into one event placed after the largest
    jump; its magnitude is the net change across the run.  A jump that moves
    q away from the series' dominant level (the median) is a breakdown, one
    that moves it back is a recovery; when both ends are equally far from the
    median, moving away from the initial value counts as a breakdown.  All of
    this is invariant under q -> a*q + b with a != 0.
    """
    q = np.asarray(q, dtype=float).reshape(-1)
    if len(q) < 3:
        raise ConfigError("need at least 3 samples to detect tipping")
    if not 0 < threshold_fraction <= 1:
        raise ConfigError("threshold_fraction must lie in (0, 1]")
    span = float(q.max() - q.min())
    if span == 0:
        return []
    dq = np.diff(q)
    jumps = np.flatnonzero(np.abs(dq) > threshold_fraction * span)
    if len(jumps) == 0:
        return []
    runs = np.split(jumps, np.flatnonzero(np.diff(jumps) > 1) + 1)
    med = float(np.median(q))
    events = []
    for run in runs:
        start, end = int(run[0]), int(run[-1]) + 1
        peak = int(run[np.argmax(np.abs(dq[run]))])
        before, after = q[start], q[end]
        magnitude = abs(after - before) or float(np.abs(dq[run]).max())
        d_before, d_after = abs(before - med), abs(after - med)
        tol = 1e-12 * span
        if abs(d_after - d_before) > tol:
            away = d_after > d_before
        else:
            away = abs(after - q[0]) > abs(before - q[0])
        kind = EventKind.BREAKDOWN if away else EventKind.RECOVERY
        events.append(TippingEvent(peak + 1, kind, float(magnitude)))
    return events


def _window(i, w, n):
    return slice(max(0, i - w), min(n, i + w + 1))


def spike_report(ps: PredictionSeries, events: Sequence[TippingEvent], window: int = 10) -> list:
    """Maximum |bias| and maximum q_std within ``window`` samples of each event."""
    if window < 0:
        raise ConfigError("window must be >= 0")
    b = np.abs(bias_series(ps))
    out = []
    for ev in events:
        sl = _window(ev.tau_index, window, len(ps))
        out.append({"tau_index": ev.tau_index, "tau": float(ps.tau[min(ev.tau_index, len(ps) - 1)]),
                    "kind": ev.kind.value, "max_abs_bias": float(b[sl].max()),
                    "max_q_std": float(ps.q_std[sl].max())})
    return out


def near_far_bias(ps: PredictionSeries, events: Sequence[TippingEvent], window: int = 10):
    """``(max |bias| near events, median |bias| elsewhere)``; None entries if a side is empty."""
    b = np.abs(bias_series(ps))
    near = np.zeros(len(ps), dtype=bool)
    for ev in events:
        near[_window(ev.tau_index, window, len(ps))] = True
    near_max = float(b[near].max()) if near.any() else None
    far_med = float(np.median(b[~near])) if (~near).any() else None
    return near_max, far_med


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

def report_stem(scenario_id: str, mode: str, arch: str) -> str:
    return f"{scenario_id}_{mode}_{arch}"


def write_report(ps: PredictionSeries, out_dir, scenario_id: str, mode: str, arch: str,
                 threshold_fraction: float = 0.3, window: int = 10,
                 extra: Optional[dict] = None):
    """CSV series plus JSON summary named ``<scenario>_<mode>_<arch>.*``.

    Events are detected on the true series.  Returns ``(csv_path, json_path)``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = report_stem(scenario_id, mode, arch)
    csv_path = ps.to_csv(out_dir / f"{stem}.csv")
    events = detect_tipping(ps.q_true, threshold_fraction)
    near, far = near_far_bias(ps, events, window)
    summary = {
        "scenario": scenario_id, "mode": mode, "arch": arch,
        "metrics": metrics(ps),
        "split_boundary": ps.split_boundary,
        "threshold_fraction": threshold_fraction,
        "spike_window": window,
        "events": [e.to_dict() for e in events],
        "spikes": spike_report(ps, events, window),
        "near_event_max_abs_bias": near,
        "far_event_median_abs_bias": far,
    }
    if extra:
        summary.update(extra)
    json_path = out_dir / f"{stem}.json"
    json_path.write_text(json.dumps(summary, indent=2, allow_nan=True))
    return csv_path, json_path
