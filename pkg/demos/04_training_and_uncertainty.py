"""
Training the regressors and reading their uncertainty
=====================================================

Fit an MLP, a Deep Ensemble, a BNN and an RNN on F1 and compare test
error and predictive spread.
"""

import numpy as np

from amoclab import build_ar, build_pi, fit_apply_scaler, scenario, split_chrono
from amoclab.evaluation import PredictionSeries, metrics
from amoclab.neural import (NetSpec, TrainConfig, predict, predict_bnn, predict_ensemble,
                            predict_rnn, train_bnn, train_ensemble, train_mlp, train_rnn)

traj = scenario("F1").integrate()
split, _ = fit_apply_scaler(split_chrono(build_pi(traj)))
spec = NetSpec(input_dim=2, hidden_layers=(64, 64))
cfg = TrainConfig()
x_te, y_te = split.test.features, split.test.targets


def report(name, mean, std=None):
    ps = PredictionSeries(None, y_te, mean, std, split_boundary=0)
    m = metrics(ps)
    spread = "" if std is None else f"  mean std {np.mean(std):.2e}"
    print(f"{name:4s} test mse {m['test_mse']:.3e}  skill {m['skill_vs_mean']:.3f}{spread}")


mlp, curve = train_mlp(split, spec, cfg)
print("MLP loss curve, first and last epoch:", curve.test_mse[0], curve.test_mse[-1])
report("MLP", predict(mlp, x_te))

ens, _ = train_ensemble(split, spec, cfg, m=10)
report("DE", *predict_ensemble(ens, x_te))

for sigma in (0.1, 1e-3):
    bnn, _ = train_bnn(split, spec, cfg, prior_std=sigma)
    mean, std = predict_bnn(bnn, x_te, n_samples=100)
    report("BNN", mean, std)
    print(f"     prior σ={sigma:g}: test prediction std / truth std = "
          f"{np.std(mean) / np.std(y_te):.3f}")

ar_split, _ = fit_apply_scaler(split_chrono(build_ar(traj, 10)))
rnn, _ = train_rnn(ar_split, hidden_dim=32, cfg=cfg)
mean = predict_rnn(rnn, ar_split.test.features)
ps = PredictionSeries(None, ar_split.test.targets, mean, split_boundary=0)
print(f"RNN  test mse {metrics(ps)['test_mse']:.3e}")
