"""
Cost per iteration against the number of particles
==================================================

Each particle runs its own Kalman update, so the plain filter's cost grows
linearly with N. After resampling many particles are copies of each other;
the fast variant updates each distinct copy once.
"""

import numpy as np

from lossfilter.harness import timing_sweep

rows = timing_sweep("linear", N_list=(5, 20, 50, 100, 200, 500, 2000), iterations=100)
print("%-10s %6s %12s %12s %14s" % ("filter", "N", "ms/iter", "pdf evals", "KF updates"))
for r in rows:
    print("%-10s %6d %12.3f %12.1f %14.1f" % (
        r["filter"], r["N"], r["sec_per_iter"] * 1e3, r["pdf_evals_per_iter"], r["iekf_updates_per_iter"]))

plain = [(r["N"], r["sec_per_iter"]) for r in rows if r["filter"] == "rbpf"]
n, t = np.array(plain, dtype=float).T
slope, intercept = np.polyfit(n, t, 1)
print("\nplain filter: %.1f us per particle + %.0f us fixed" % (slope * 1e6, intercept * 1e6))
