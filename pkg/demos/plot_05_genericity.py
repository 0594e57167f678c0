"""
Perturbing the data: how generic is the kink qualification?
===========================================================

Each trial adds ``eps * (a0 + <a, w>)`` to every switch and constraint,
with coefficients uniform in ``[-1, 1]`` over the admissible inputs ``w``.
The degenerate kink of ``sin x - x`` disappears under almost every
perturbation; the regular kinks of ``-sin x`` survive small ones.
"""

import time

from likq import genericity_experiment, make_problem, perturb
from likq.explore import Segment, survey

segment = [Segment([-4.0], [4.0])]

t0 = time.perf_counter()
degenerate = make_problem(1, ["sin(x1) - x1"])
rep = genericity_experiment(degenerate, segment, eps=1e-2, trials=100, seed=0)
print(f"sin x - x : base {rep.base_fraction}, perturbed {rep.fraction} ({time.perf_counter() - t0:.1f} s)")

regular = make_problem(1, ["-sin(x1)"])
rep = genericity_experiment(regular, segment, eps=1e-3, trials=100, seed=0)
smallest = min(ch.min_singular_value for r in rep.records for ch in r.checks)
print(f"-sin x    : base {rep.base_fraction}, perturbed {rep.fraction}, smallest singular value {smallest:.4f}")

# Any trial can be rebuilt from its recorded seed.
trial = rep.records[17]
again = survey(perturb(regular, 1e-3, tuple(trial.seed)), segment)
print("trial 17 kinks:", [round(float(ch.x[0]), 6) for ch in again.checks])
print(perturb(degenerate, 1e-2, (0, 17)).c[0])
