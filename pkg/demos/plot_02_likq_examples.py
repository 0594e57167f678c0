"""
A regular kink and a degenerate one
===================================

At every kink of ``|sin x|`` the derivative of the switch ``z = -sin x`` is
``+-1``, so the kink qualification holds.  For ``z = sin x - x`` the switch
vanishes at 0 together with its derivative ``cos 0 - 1``, and the
qualification fails.
"""

import math

from likq import check_likq, make_problem, solve_switching

regular = make_problem(1, ["-sin(x1)"])
for k in range(-2, 3):
    v = check_likq(regular, solve_switching(regular.c, [k * math.pi]))
    print(f"x = {k:+d} pi: active {v.pattern.alpha}, matrix {v.matrix.ravel()}, holds {v.holds}")

degenerate = make_problem(1, ["sin(x1) - x1"])
for x in (0.0, 1.0):
    v = check_likq(degenerate, solve_switching(degenerate.c, [x]))
    print(f"x = {x}: active {v.pattern.alpha}, rank {v.rank}/{v.required}, holds {v.holds}")

# With constraints, active inequalities and all equalities join the stack.
circle = make_problem(2, ["x1 - x2"], g=["x2 + 0.5"], h=["x1^2 + x2^2 - 1"])
r = 1 / math.sqrt(2)
v = check_likq(circle, solve_switching(circle.c, [r, r]))
print("kink on the unit circle:", v.matrix.tolist(), "holds", v.holds)
