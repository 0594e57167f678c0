"""
The same verdict from jet transversality
========================================

The 0-jet ``w -> (w, c(w), g(w), h(w))`` either meets the stratum
containing its value transversally or it does not.  At feasible points that
rank test agrees with the kink qualification, and so does the test on the
lifted space where every component reads only its own input block.
"""

import math

import numpy as np

from likq import make_problem, random_problem, sample_feasible, solve_switching
from likq.strata import build_pi, check_transversality, structured_transversality

degenerate = make_problem(1, ["sin(x1) - x1"])
rep = check_transversality(degenerate, [0.0], [0.0], [0.0])
print("sin x - x at 0: rank", rep.rank, "of", rep.required, "->", rep.holds)
print(rep.matrix)

regular = make_problem(1, ["-sin(x1)"])
sol = solve_switching(regular.c, [math.pi])
rep = check_transversality(regular, sol.x, sol.y, sol.z)
print("-sin x at pi: rank", rep.rank, "of", rep.required, "->", rep.holds)

# The selection operator stacks each component's inputs; its left inverse picks the last copy.
pi = build_pi(1, 2, 0, 0)
print("Pi is", pi.matrix.shape, "; left inverse exact:", np.array_equal(pi.left_inverse @ pi.matrix, np.eye(5, dtype=int)))

# Plain, lifted and split tests on random feasible points.
prob = random_problem(2, 3, 1, 1, seed=7)
res = sample_feasible(prob, [(-2, 2), (-2, 2)], 10, seed=1)
for s in res.points:
    st = structured_transversality(prob, s.x)
    print(np.round(s.x, 3), st.plain.holds, st.lifted_holds, st.split_holds)
