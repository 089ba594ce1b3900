"""
Explaining the networks
=======================

DeepLIFT and Shapley maps for a network trained on F4, the checks that
tie them together, and the physical plausibility flags.
"""

import numpy as np

from amoclab import build_pi, fit_apply_scaler, scenario, split_chrono
from amoclab.attribution import (AttrMethod, attribute_map, deeplift, make_baseline,
                                 model_function, plausibility_report, shapley_exact)
from amoclab.datagen import Dataset
from amoclab.neural import NetSpec, train_ensemble

ds = build_pi(scenario("F4").integrate())
split, scaler = fit_apply_scaler(split_chrono(ds))
ens, _ = train_ensemble(split, NetSpec(6), m=5)
baseline = make_baseline("train_mean", train_features=split.train.features)
full = scaler.transform(ds.features)

# one row: both methods sum to the same output difference
f = model_function(ens)
x = full[1200]
dl = deeplift(ens, x, baseline, ds.feature_names)
sh = shapley_exact(ens, x, baseline, ds.feature_names)
gap = f(x[None])[0] - f(baseline.x0[None])[0]
print("f(x) - f(x0):", gap)
print("DeepLIFT sum:", dl.scores.sum(), " Shapley sum:", sh.scores.sum())
for name, a, b in zip(ds.feature_names, dl.scores, sh.scores):
    print(f"  {name:4s} {a:+.3e} {b:+.3e}")

# whole-series maps and their plausibility flags
scaled = Dataset(full, ds.targets, ds.feature_names, ds.mode, tau=ds.tau)
for method in (AttrMethod.DEEPLIFT, AttrMethod.SHAPLEY):
    amap = attribute_map(ens, scaled, method, baseline)
    rep = plausibility_report(amap)
    print(amap.method.value, {k: rep[k] for k in ("salinity_dominant", "polarity_opposed")})
    print("   mean |score|:", {k: f"{v:.2e}" for k, v in rep["mean_abs"].items()})

# S1 and S2 move in lockstep in this setup, so the split of credit between them is arbitrary
print("corr(S1, S2) =", np.corrcoef(ds.features[:, 0], ds.features[:, 1])[0, 1])
