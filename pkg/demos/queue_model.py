"""
Waiting times in a priority task list
=====================================

A fixed list of tasks, each with a random priority.  Every step the list
runs its most urgent task with probability ``p`` and a random one otherwise,
then refills the slot.  With ``p`` close to one, low-priority tasks starve
and waiting times become heavy tailed.
"""

import numpy as np

from weblogdyn import QueueConfig, fit_slope, log_bin, simulate

# one task per step, nearly always the most urgent
cfg = QueueConfig(L=100, p=0.99999, nu=1, steps=10**7, seed=1)
waits = simulate(cfg)
print(f"{waits.n} recorded waits, {waits.censored} tasks still queued at the end")

# the tail is read off a log-binned density
hist = log_bin(waits.expand(), discrete=True)
fit = fit_slope(hist, (2, 1e3))
print(f"nu=1   slope {fit.slope:.3f} +- {fit.stderr:.3f}")

# running several tasks per step
for nu in (3, 5):
    s = simulate(QueueConfig(L=100, p=0.99999, nu=nu, steps=10**7, seed=1))
    f = fit_slope(log_bin(s.expand(), discrete=True), (2, 1e3))
    print(f"nu={nu}   slope {f.slope:.3f} +- {f.stderr:.3f}   median wait {np.median(s.expand()):.0f}")

# random execution gives geometric waits with mean L
flat = simulate(QueueConfig(L=10, p=0.0, nu=1, steps=10**5, seed=2)).expand()
print(f"p=0    mean wait {flat.mean():.2f} (geometric mean 10)")
