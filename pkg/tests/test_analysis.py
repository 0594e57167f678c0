import math

import numpy as np
import pytest

from likq import make_problem, random_problem, solve_switching
from likq.analysis import (
    active_sets,
    check_likq,
    first_order,
    jz_fd_oracle,
    numerical_rank,
    snap_signs,
)
from likq.errors import InfeasibleError, OracleInapplicableError
from likq.expr import Point, eval_expr

from conftest import PI_MULTIPLES


@pytest.mark.parametrize("x", PI_MULTIPLES)
def test_negsin_kinks_satisfy_likq(negsin, x):
    v = check_likq(negsin, solve_switching(negsin.c, [x]))
    assert v.pattern.alpha == (0,)
    assert v.matrix.shape == (1, 1)
    assert abs(abs(v.matrix[0, 0]) - 1.0) <= 1e-9
    assert v.holds


def test_negsin_away_from_kink(negsin):
    pat = active_sets(negsin, solve_switching(negsin.c, [math.pi / 2]))
    assert pat.alpha == ()
    np.testing.assert_array_equal(pat.sigma, [-1])


def test_violated_inequality_is_reported():
    prob = make_problem(1, ["x1"], g=["x1"])
    with pytest.raises(InfeasibleError) as info:
        active_sets(prob, solve_switching(prob.c, [-1.0]))
    assert info.value.constraint == "g1"
    assert info.value.value == -1.0


def test_single_switch_blocks(negsin):
    sol = solve_switching(negsin.c, [0.4])
    fo = first_order(negsin, sol, snap_signs(sol.z))
    np.testing.assert_array_equal(fo.L, [[0.0]])
    np.testing.assert_array_equal(fo.M, [[0.0]])
    np.testing.assert_array_equal(fo.S, [[1.0]])
    np.testing.assert_array_equal(fo.Jz, fo.Z)


def test_three_switch_first_order(three_switch):
    sol = solve_switching(three_switch.c, [3.0, -5.0])
    fo = first_order(three_switch, sol, snap_signs(sol.z))
    np.testing.assert_array_equal(fo.sigma, [1, -1, -1])
    np.testing.assert_array_equal(fo.S, [[1, 0, 0], [0, 1, 0], [1, 1, 1]])
    np.testing.assert_array_equal(fo.Jz, [[1, 0], [0, 1], [1, 1]])
    # row 3 is the gradient of |x1| - |x2| at (3, -5)
    h = 1e-6
    fd = [((abs(3 + h) - 5) - (abs(3 - h) - 5)) / (2 * h), ((3 - abs(-5 + h)) - (3 - abs(-5 - h))) / (2 * h)]
    np.testing.assert_allclose(fo.Jz[2], fd, atol=1e-8)


def test_degenerate_kink(sinx_minus_x):
    v = check_likq(sinx_minus_x, solve_switching(sinx_minus_x.c, [0.0]))
    assert abs(v.first_order.Jz[0, 0]) <= 1e-12
    np.testing.assert_array_equal(v.matrix, [[0.0]])
    assert v.rank == 0 and v.required == 1
    assert not v.holds


def test_degenerate_example_away_from_origin(sinx_minus_x):
    v = check_likq(sinx_minus_x, solve_switching(sinx_minus_x.c, [1.0]))
    assert v.pattern.alpha == ()
    assert v.required == 0 and v.holds


def test_vacuous_condition():
    prob = make_problem(2, ["x1 + 1"])
    v = check_likq(prob, solve_switching(prob.c, [0.0, 0.0]))
    assert v.matrix.shape == (0, 2)
    assert v.holds and v.min_singular_value is None


def test_jz_oracle_examples(negsin, three_switch):
    fd = jz_fd_oracle(negsin, [math.pi / 4], [1.0])
    np.testing.assert_allclose(fd, [-math.cos(math.pi / 4)], atol=1e-6)
    const = make_problem(1, ["2.5"])
    np.testing.assert_array_equal(jz_fd_oracle(const, [0.3], [1.0]), [0.0])
    fd = jz_fd_oracle(three_switch, [3.0, -5.0], [1.0, 0.0])
    np.testing.assert_allclose(fd, [1.0, 0.0, 1.0], atol=1e-6)


def test_jz_oracle_refuses_kinks(negsin, three_switch):
    with pytest.raises(OracleInapplicableError):
        jz_fd_oracle(negsin, [0.0], [1.0])
    with pytest.raises(OracleInapplicableError):
        jz_fd_oracle(three_switch, [5e-7, 2.0], [1.0, 0.0])


def _fd_partials(prob, sol, h=1e-6):
    """Independent oracle: central differences of every piece in (x, y, z) at the solved point."""
    pieces = list(prob.c) + list(prob.g) + list(prob.h)
    w = sol.point.flat()
    J = np.zeros((len(pieces), w.size))
    for k in range(w.size):
        wp, wm = w.copy(), w.copy()
        wp[k] += h
        wm[k] -= h
        pp, pm = Point.from_flat(wp, prob.n, prob.s), Point.from_flat(wm, prob.n, prob.s)
        for r, e in enumerate(pieces):
            J[r, k] = (eval_expr(e, pp) - eval_expr(e, pm)) / (2 * h)
    return J


def test_partial_blocks_match_differences_on_random_problems():
    rng = np.random.default_rng(3)
    for k in range(100):
        n, s, p, q = (int(v) for v in rng.integers(1, 4, 4))
        prob = random_problem(n, s, p, q, seed=1000 + k)
        sol = solve_switching(prob.c, rng.uniform(-2, 2, n))
        fo = first_order(prob, sol, snap_signs(sol.z))
        ad = np.vstack(
            [
                np.hstack([fo.Z, fo.L, fo.M]),
                np.hstack([fo.Gx, fo.Gy, fo.Gz]),
                np.hstack([fo.Hx, fo.Hy, fo.Hz]),
            ]
        )
        fd = _fd_partials(prob, sol)
        assert np.max(np.abs(ad - fd)) <= 1e-6 * (1.0 + np.max(np.abs(ad)))
        # strictly lower triangular by construction, with exact zeros
        assert not np.triu(fo.L).any() and not np.triu(fo.M).any()


def test_jz_matches_solution_map_differences():
    rng = np.random.default_rng(4)
    compared = 0
    for k in range(100):
        n, s = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        prob = random_problem(n, s, 0, 0, seed=2000 + k)
        x = rng.uniform(-2, 2, n)
        d = rng.standard_normal(n)
        try:
            fd = jz_fd_oracle(prob, x, d)
        except OracleInapplicableError:
            continue
        sol = solve_switching(prob.c, x)
        Jz = first_order(prob, sol, snap_signs(sol.z)).Jz
        compared += 1
        assert np.max(np.abs(Jz @ d - fd)) <= 1e-6 * (1.0 + np.max(np.abs(Jz @ d)))
    assert compared >= 80


def test_numerical_rank_threshold():
    assert numerical_rank(np.diag([1.0, 1e-12]))[0] == 1
    assert numerical_rank(np.diag([1.0, 1e-6]))[0] == 2
    assert numerical_rank(np.zeros((2, 2)))[0] == 0
    assert numerical_rank(np.zeros((0, 3)))[0] == 0


def _active_problem(g_texts):
    # two kinks at the origin plus the given inequalities
    return make_problem(3, ["x1", "x2 + y1"], g=g_texts)


def test_verdict_invariant_under_constraint_order():
    g = ["x3", "x1 + x3", "2 - x2"]
    x = [0.0, 0.0, 0.0]
    base = check_likq(_active_problem(g), solve_switching(_active_problem(g).c, x))
    for perm in ([1, 0, 2], [2, 1, 0], [2, 0, 1]):
        prob = _active_problem([g[i] for i in perm])
        v = check_likq(prob, solve_switching(prob.c, x))
        assert (v.holds, v.rank, v.required) == (base.holds, base.rank, base.required)


def test_inactive_constraint_does_not_change_verdict():
    x = [0.0, 0.0, 0.0]
    for g in (["x3"], ["x1 + x2"]):
        a = _active_problem(g)
        b = _active_problem(g + ["5 + x1^2"])
        va = check_likq(a, solve_switching(a.c, x))
        vb = check_likq(b, solve_switching(b.c, x))
        assert va.holds == vb.holds and va.rank == vb.rank
        assert vb.pattern.beta == va.pattern.beta


def test_too_many_active_rows_always_fail():
    # n = 1 with two active switches and an equality: at most rank 1
    prob = make_problem(1, ["x1", "2*x1"], h=["x1"])
    v = check_likq(prob, solve_switching(prob.c, [0.0]))
    assert v.required == 3 > prob.n
    assert not v.holds
