import itertools
import math

import numpy as np
import pytest

from likq import make_problem, random_problem, solve_switching
from likq.errors import IncompatibleSignatureError, NotInStratifiedSetError
from likq.expr import Point
from likq.strata import (
    JetPoint,
    build_pi,
    check_transversality,
    iter_signatures,
    jet,
    likq_transversality_agree,
    membership,
    stratification_dimension,
    structured_derivative,
    structured_eval,
    structured_transversality,
    structured_transversality_agree,
    tangent_basis,
    whitney_refinement_check,
)
from likq.absnormal import eval_many


def test_jet_values(negsin):
    jp = jet(negsin, [0.0], [0.0], [0.0])
    np.testing.assert_array_equal(jp.c_val, [0.0])
    assert jp.flat().shape == (negsin.d + negsin.m,)


def test_feasible_jets_lie_in_the_stratified_set(negsin, three_switch):
    for prob, x in ((negsin, [1.3]), (negsin, [0.0]), (three_switch, [3.0, -5.0]), (three_switch, [0.0, 2.0])):
        sol = solve_switching(prob.c, x)
        assert membership(jet(prob, sol.x, sol.y, sol.z)) is not None


def test_inconsistent_jet_rejected(negsin):
    assert membership(jet(negsin, [0.0], [1.0], [1.0])) is None
    with pytest.raises(NotInStratifiedSetError):
        check_transversality(negsin, [0.0], [1.0], [1.0])


def test_membership_signature(sinx_minus_x):
    sig = membership(jet(sinx_minus_x, [0.0], [0.0], [0.0]))
    np.testing.assert_array_equal(sig[0], [0])
    assert sig[1].size == 0


def test_membership_constraints():
    e = np.zeros(0)
    assert membership(JetPoint(np.zeros(1), e, e, e, e, np.array([0.5]))) is None
    sig = membership(JetPoint(np.zeros(1), e, e, e, np.array([2.0]), e))
    np.testing.assert_array_equal(sig[1], [1])


def test_tangent_basis_columns():
    B = tangent_basis([0], [], 1, 0)
    np.testing.assert_array_equal(B, [[1], [0], [0], [0]])
    B = tangent_basis([-1], [], 1, 0)
    np.testing.assert_array_equal(B[1:, 1], [1, -1, -1])
    B = tangent_basis([1], [], 1, 0)
    np.testing.assert_array_equal(B[1:, 1], [1, 1, 1])


@pytest.mark.parametrize("n, s, p, expected", [(1, 1, 0, 2), (3, 0, 0, 3), (2, 2, 1, 5)])
def test_stratification_dimension(n, s, p, expected):
    assert stratification_dimension(n, s, p) == expected
    dims = [tangent_basis(sg, om, n, 0).shape[1] for sg, om in iter_signatures(s, p)]
    assert max(dims) == expected


def test_transversality_examples(negsin, sinx_minus_x):
    rep = check_transversality(negsin, [math.pi], [0.0], [0.0])
    assert rep.matrix.shape == (4, 4)  # [I_3; D c | e_x]
    assert rep.rank == 4 and rep.holds
    rep = check_transversality(sinx_minus_x, [0.0], [0.0], [0.0])
    assert rep.rank == 3 and not rep.holds


def test_transversal_off_the_kinks():
    prob = make_problem(2, ["x1 * x2 + 1", "cos(y1)"])
    sol = solve_switching(prob.c, [0.3, 0.9])
    assert check_transversality(prob, sol.x, sol.y, sol.z).holds


def test_agreement_on_examples(negsin, sinx_minus_x):
    assert likq_transversality_agree(negsin, [math.pi]) == (True, True)
    assert likq_transversality_agree(sinx_minus_x, [0.0]) == (False, False)


def test_agreement_on_constrained_problems():
    prob = make_problem(2, ["x1 - x2"], g=["x2 + 0.5"], h=["x1^2 + x2^2 - 1"])
    r = 1 / math.sqrt(2)
    likq, trans = likq_transversality_agree(prob, [r, r])
    assert likq == trans == True  # noqa: E712
    # kink, active inequality and equality stacked on one coordinate
    prob = make_problem(1, ["x1"], g=["x1"], h=["x1"])
    assert likq_transversality_agree(prob, [0.0]) == (False, False)


def test_whitney_examples():
    assert whitney_refinement_check([1], [], [0], [], 1, 0)
    assert whitney_refinement_check([-1, 1], [1], [-1, 1], [1], 2, 0)
    with pytest.raises(IncompatibleSignatureError):
        whitney_refinement_check([1], [], [-1], [], 1, 0)


def test_whitney_refinement_exhaustive():
    checked = 0
    for s in range(4):
        for p in range(3):
            for q in (0, 1):
                sigs = list(iter_signatures(s, p))
                for (sg, om), (sl, ol) in itertools.product(sigs, sigs):
                    compatible = all(b in (0, a) for a, b in zip(sg, sl)) and all(b in (0, a) for a, b in zip(om, ol))
                    if not compatible:
                        with pytest.raises(IncompatibleSignatureError):
                            whitney_refinement_check(sg, om, sl, ol, 2, q)
                        continue
                    assert whitney_refinement_check(sg, om, sl, ol, 2, q)
                    checked += 1
    assert checked > 500


def test_pi_shape_and_left_inverse():
    pi = build_pi(1, 2, 0, 0)
    assert pi.d == 5
    assert pi.lifted_dim == 1 + 3 + 5 + 5
    assert pi.matrix.dtype.kind == "i"
    np.testing.assert_array_equal(pi.left_inverse @ pi.matrix, np.eye(5, dtype=int))


def test_pi_without_switches():
    pi = build_pi(3, 0, 1, 1)
    np.testing.assert_array_equal(pi.matrix, np.vstack([np.eye(3), np.eye(3)]))


@pytest.mark.parametrize("dims", [(1, 1, 0, 0), (2, 3, 1, 1), (4, 4, 4, 4), (0, 2, 1, 0)])
def test_pi_properties(dims):
    n, s, p, q = dims
    pi = build_pi(*dims)
    d = n + 2 * s
    assert pi.matrix.shape == (pi.lifted_dim, d)
    assert set(np.unique(pi.matrix)) <= {0, 1}
    # every row selects exactly one coordinate, so Pi is injective with a 0/1 left inverse
    np.testing.assert_array_equal(pi.matrix.sum(axis=1), np.ones(pi.lifted_dim))
    np.testing.assert_array_equal(pi.left_inverse @ pi.matrix, np.eye(d, dtype=int))
    assert np.linalg.matrix_rank(pi.matrix) == d


def test_structured_eval_reproduces_plain_eval():
    rng = np.random.default_rng(8)
    for k in range(100):
        n, s, p, q = (int(v) for v in rng.integers(1, 4, 4))
        prob = random_problem(n, s, p, q, seed=300 + k)
        pi = build_pi(n, s, p, q)
        pt = Point(rng.uniform(-2, 2, n), rng.uniform(0, 2, s), rng.uniform(-2, 2, s))
        plain = eval_many(list(prob.c) + list(prob.g) + list(prob.h), pt)
        np.testing.assert_array_equal(structured_eval(prob, pi, pi.matrix @ pt.flat()), plain)


def test_structured_derivative_factors_through_pi():
    from likq.analysis import jacobian

    prob = random_problem(2, 3, 1, 1, seed=17)
    pi = build_pi(2, 3, 1, 1)
    pt = Point([0.4, -1.1], [0.2, 1.0, 0.5], [-0.2, 1.0, 0.5])
    D = structured_derivative(prob, pi, pi.matrix @ pt.flat())
    plain = jacobian(list(prob.c) + list(prob.g) + list(prob.h), pt)
    np.testing.assert_allclose(D @ pi.matrix, plain, rtol=0, atol=1e-15)


def test_structured_examples(negsin, sinx_minus_x):
    assert structured_transversality_agree(negsin, [math.pi]) == (True, True)
    assert structured_transversality_agree(sinx_minus_x, [0.0]) == (False, False)
    rep = structured_transversality(sinx_minus_x, [0.0])
    assert rep.split_holds is False


def test_structured_agreement_on_random_instances():
    rng = np.random.default_rng(9)
    for k in range(60):
        n, s, p, q = (int(v) for v in rng.integers(1, 4, 4))
        prob = random_problem(n, s, p, 0, seed=400 + k)
        sol = solve_switching(prob.c, rng.uniform(-2, 2, n))
        try:
            rep = structured_transversality(prob, sol.x)
        except NotInStratifiedSetError:
            continue
        assert rep.plain.holds == rep.lifted_holds == rep.split_holds
