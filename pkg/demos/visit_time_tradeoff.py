"""How visit-time choices shape the mean sojourn time.

Two experiments on the base system, both refitting queue 2's visit law
with a two-moment phase-type fit at each grid point:

 * sweep the visit mean: too-short visits rarely finish anyone, too-long
   visits starve the other queue, so the arrival-weighted sojourn mean
   has an interior minimum;
 * sweep the visit squared coefficient of variation at fixed mean to see
   the (mild) effect of visit-time variability.
"""
import dataclasses

import numpy as np

from mginfpolling import (
    Deterministic,
    Exponential,
    QueueSpec,
    SystemSpec,
    fit_two_moments,
    weighted_sojourn_mean,
)

base = SystemSpec((
    QueueSpec(arrival_rate=0.8, service=Exponential(1.0),
              visit=Exponential(1.0), switch=Deterministic(0.25)),
    QueueSpec(arrival_rate=0.5, service=Exponential(1.5),
              visit=Exponential(1.5), switch=Deterministic(0.25)),
))


def with_visit(system, queue, law):
    queues = list(system.queues)
    queues[queue] = dataclasses.replace(queues[queue], visit=law)
    return SystemSpec(tuple(queues))


print("sweep 1: queue 2 visit mean, scv held at 1")
grid = np.linspace(0.1, 3.0, 25)
values = [weighted_sojourn_mean(with_visit(base, 1, fit_two_moments(g, 1.0)))
          for g in grid]
for g, v in zip(grid[::4], values[::4]):
    print(f"  E[V2] = {g:5.3f}  weighted E[S] = {v:.5f}")
best = int(np.argmin(values))
print(f"  minimum {values[best]:.5f} at E[V2] = {grid[best]:.3f} "
      f"(interior point {best + 1} of {len(grid)})")

print("\nsweep 2: queue 2 visit scv, mean held at 2/3")
for scv in (0.25, 0.5, 1.0, 2.0, 4.0):
    law = fit_two_moments(2 / 3, scv)
    v = weighted_sojourn_mean(with_visit(base, 1, law))
    print(f"  scv = {scv:4.2f} ({type(law).__name__:<16}) "
          f"weighted E[S] = {v:.5f}")
print("the fit family switches at scv = 1; the sojourn mean moves "
      "smoothly through the boundary")
