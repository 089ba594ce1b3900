"""
Physics-informed and autoregressive datasets
============================================

Turn a trajectory into feature matrices, split them in time order and
standardize with training statistics only.
"""

import tempfile
from pathlib import Path

import numpy as np

from amoclab import build_ar, build_pi, fit_apply_scaler, read_dataset, scenario, split_chrono, write_dataset

f1 = scenario("F1").integrate()
f4 = scenario("F4").integrate()

pi = build_pi(f1)
print("F1 PI features:", pi.feature_names, pi.features.shape)
print("F4 PI features:", build_pi(f4).feature_names)

ar = build_ar(f1, window=10)
print("AR features:", ar.feature_names[:3], "...", ar.feature_names[-1], ar.features.shape)
# each row is a window of q, the target the next value
assert np.array_equal(ar.features[5], f1.q[5:15]) and ar.targets[5] == f1.q[15]

raw = split_chrono(pi, 0.7)
split, scaler = fit_apply_scaler(raw)
print("train/test:", len(split.train), len(split.test), "boundary", split.boundary_index)
print("train means after scaling:", split.train.features.mean(axis=0).round(12))
print("test means after scaling:", split.test.features.mean(axis=0).round(3))

out = Path(tempfile.mkdtemp())
write_dataset(pi, out / "f1_pi.csv", scaler, {"boundary_index": raw.boundary_index})
back, sc, meta = read_dataset(out / "f1_pi.csv")
print("round trip equal:", np.array_equal(back.features, pi.features), "meta keys", sorted(meta))
