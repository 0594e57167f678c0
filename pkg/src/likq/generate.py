"""Seeded random abs-normal instances for the oracle checks."""

import numpy as np

from .absnormal import AbsNormalProblem, SwitchingFunction, eval_many, solve_switching, validate
from .errors import LikqError
from .explore import _admissible
from .expr import Binary, Const, random_expr

SMOOTH_OPS = ("+", "-", "*", "sin", "cos")


def random_problem(n, s, p, q, seed, max_depth=3, name=None) -> AbsNormalProblem:
    """Random valid problem; ``c_i`` only draws from its admissible inputs.

    Pieces are depth <= ``max_depth`` trees over ``{+, -, *, sin, cos}`` with
    constants in ``[-2, 2]``.  Deterministic in ``seed``.

    Constraints are shifted so that a random anchor ``x0`` in ``[-2, 2]^n``
    is feasible: ``h_j = r_j - r_j(x0)`` and ``g_j = r_j - r_j(x0) + u_j``
    with ``u_j`` uniform in ``[0, 1]``.  Otherwise most random equality
    systems would have no solution at all.
    """
    if min(n, s, p, q) < 0:
        raise ValueError("dimensions must be non-negative")
    rng = np.random.default_rng(seed)
    c = [random_expr(rng, _admissible(n, s, i), max_depth, SMOOTH_OPS) for i in range(1, s + 1)]
    everything = _admissible(n, s)
    g = [random_expr(rng, everything, max_depth, SMOOTH_OPS) for _ in range(p)]
    h = [random_expr(rng, everything, max_depth, SMOOTH_OPS) for _ in range(q)]
    x0 = rng.uniform(-2.0, 2.0, n)
    slack = rng.uniform(0.0, 1.0, p)
    try:
        anchor = solve_switching(SwitchingFunction(n, c), x0).point
        g0, h0 = eval_many(g, anchor), eval_many(h, anchor)
    except LikqError:  # the smooth operator set cannot fail, but custom ops might
        g0, h0 = np.zeros(p), np.zeros(q)
    g = [Binary("+", Binary("-", e, Const(float(v))), Const(round(float(u), 3))) for e, v, u in zip(g, g0, slack)]
    h = [Binary("-", e, Const(float(v))) for e, v in zip(h, h0)]
    prob = AbsNormalProblem(
        n=n,
        c=SwitchingFunction(n, c),
        g=g,
        h=h,
        name=name if name is not None else f"random-{n}-{s}-{p}-{q}-seed{seed}",
    )
    validate(prob).raise_if_invalid()
    return prob
