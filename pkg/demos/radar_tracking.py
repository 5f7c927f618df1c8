"""
Range/bearing tracking with unannounced dropouts
================================================

A target moves in the plane under a constant-acceleration model with
random jerk. A radar reports range and bearing, but packets go missing and
the tracker only receives noise in their place. The measurement is
nonlinear, so every estimator linearizes around its prediction.
"""

import numpy as np

from lossfilter import build_tracking, make_filter, simulate
from lossfilter.harness import ExperimentConfig, run_experiment
from lossfilter.scenarios import POSITION_INDEX

model, loss = build_tracking(p_loss=0.3)
print("state: (p1, v1, a1, p2, v2, a2); measurement: (range, bearing)")
print("R diagonal:", np.diag(model.R))

rec = simulate(model, loss, T=200, seed=3)
pos = rec.states[:, list(POSITION_INDEX)]
print("target travels from (%.0f, %.0f) to (%.0f, %.0f)" % (*pos[0], *pos[-1]))

for name in ["iekf", "bkf1", "bkf2", "rbpf_fast"]:
    flt = make_filter(name, model, loss, particles=200, seed=3)
    state = flt.init()
    err = []
    for k in range(rec.horizon):
        state, est, _ = flt.step(state, rec.measurements[k], rec.gammas[k])
        err.append(np.linalg.norm(est.mean[list(POSITION_INDEX)] - pos[k]))
    print("%-10s final position error %.2f, mean %.2f" % (name, err[-1], np.mean(err)))

# RMSE against the loss probability, averaged over trials.
config = ExperimentConfig(
    scenario="tracking",
    filters=("iekf", "bkf1", "bkf2", "rbpf_fast"),
    loss_probs=(0.1, 0.5, 0.7),
    particles=(200,),
    trials=20,
    horizon=200,
)
report = run_experiment(config)
print("\nsummed position RMSE, %d trials" % config.trials)
for p in config.loss_probs:
    print("p=%.1f " % p + "  ".join("%s %.0f" % (n, report.summed(n, p)) for n in config.filters))

# With a bad starting guess and 90% losses there is too little information
# to recover, and the harness flags the affected filters.
from lossfilter.harness import degraded_filters

bad = run_experiment(ExperimentConfig(
    scenario="tracking", filters=config.filters, loss_probs=(0.9,), particles=(200,),
    trials=10, horizon=200, bad_init=True))
ref = run_experiment(ExperimentConfig(
    scenario="tracking", filters=config.filters, loss_probs=(0.5,), particles=(200,), trials=10, horizon=200))
print("\ndegraded at p=0.9 with a start at (200, 200):", [name for name, _ in degraded_filters(bad, ref)])
