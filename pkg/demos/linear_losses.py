"""
Estimating a linear system when dropouts are unannounced
========================================================

A two-state linear system is observed through a scalar sensor. Some
measurements never arrive, and the receiver cannot tell: it just sees
noise. We compare a Kalman filter that trusts every sample, an IEKF that is
told which samples were lost, and the three estimators that infer the
losses themselves.
"""

import numpy as np

from lossfilter import build_linear, make_filter, simulate

# A single trajectory first, with 30% of the measurements lost.
model, loss = build_linear(p_loss=0.3)
rec = simulate(model, loss, T=60, seed=7)
print("received pattern:", "".join(str(g) for g in rec.gammas[:40]), "...")

# A lost sample is pure sensor noise, so it looks like a small reading.
print("mean |y| when received: %.2f, when lost: %.2f" % (
    np.abs(rec.measurements[rec.gammas == 1]).mean(),
    np.abs(rec.measurements[rec.gammas == 0]).mean(),
))

# Run every estimator on the same measurements.
names = ["kf_naive", "iekf", "bkf1", "bkf2", "rbpf"]
errors = {}
for name in names:
    flt = make_filter(name, model, loss, particles=20, seed=7)
    state = flt.init()
    sq = []
    for k in range(rec.horizon):
        state, est, diag = flt.step(state, rec.measurements[k], rec.gammas[k])
        sq.append(np.sum((rec.states[k] - est.mean) ** 2))
    errors[name] = np.sqrt(np.mean(sq))
for name in names:
    print("%-9s RMS error over the trajectory: %.3f" % (name, errors[name]))

# BKF-II carries the probability that each sample arrived; compare it with
# the truth.
flt = make_filter("bkf2", model, loss)
state = flt.init()
lam = []
for k in range(rec.horizon):
    state, est, diag = flt.step(state, rec.measurements[k])
    lam.append(diag["lambda"])
lam = np.array(lam)
print("mean P(received) on received samples: %.2f, on lost ones: %.2f" % (
    lam[rec.gammas == 1].mean(), lam[rec.gammas == 0].mean()))

# Monte Carlo over many trajectories gives the per-step RMSE curves.
from lossfilter.harness import ExperimentConfig, run_experiment

config = ExperimentConfig(
    scenario="linear", filters=tuple(names), loss_probs=(0.1, 0.3, 0.5), trials=50, horizon=200
)
report = run_experiment(config)
print("\nsummed RMSE over 200 steps, 50 trials")
print("p     " + "".join("%10s" % n for n in names))
for p in config.loss_probs:
    print("%.1f   " % p + "".join("%10.1f" % report.summed(n, p) for n in names))
