"""
Finding kinks and feasible points
=================================

Kinks are located along line segments by sign-change bisection of every
switch.  Feasible points for constrained problems come from uniform draws,
projected onto the equality manifold by damped Gauss-Newton.
"""

import numpy as np

from likq import make_problem, sample_feasible
from likq.explore import Segment, locate_kinks

prob = make_problem(1, ["-sin(x1)"])
for k in locate_kinks(prob, Segment([-4.0], [4.0]), grid=200):
    print(f"kink of switch {k.component + 1} at x = {k.x[0]:+.15f} (z = {k.z_value:.1e})")

chain = make_problem(2, ["x1", "x2", "y1 - y2"])
for k in locate_kinks(chain, Segment([-1.0, 2.0], [3.0, -2.0]), grid=101):
    print(f"t = {k.t:.6f}, switch {k.component + 1}, x = {k.x}")

circle = make_problem(2, ["x1 - x2"], g=["x2 + 0.5"], h=["x1^2 + x2^2 - 1"])
res = sample_feasible(circle, [(-2, 2), (-2, 2)], 40, seed=0)
print(f"{len(res.points)} of {res.drawn} draws kept; {res.rejected_infeasible} violate g, "
      f"{res.nonconvergent} did not converge, {res.left_box} left the box")
print("max |h| over kept points:", max(abs(s.x @ s.x - 1) for s in res.points))
print("kept x2 values all >= -0.5:", bool(np.all([s.x[1] >= -0.5 - 1e-8 for s in res.points])))
