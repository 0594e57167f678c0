import math

import numpy as np
import pytest

from likq import make_problem, solve_switching
from likq.analysis import check_likq
from likq.errors import ProbeError
from likq.explore import (
    Segment,
    distinct_points,
    draw_perturbation,
    genericity_experiment,
    locate_kinks,
    perturb,
    sample_feasible,
    survey,
)
from likq.expr import eval_expr, free_vars, Point


def test_negsin_kinks_on_segment(negsin):
    seg = Segment([-4.0], [4.0])
    kinks = locate_kinks(negsin, seg, grid=200)
    xs = [k.x[0] for k in kinks]
    np.testing.assert_allclose(xs, [-math.pi, 0.0, math.pi], atol=1e-10)
    assert all(k.component == 0 for k in kinks)
    assert all(abs(k.z_value) <= 1e-10 for k in kinks)


def test_no_sign_change_means_no_kinks():
    prob = make_problem(1, ["x1 + 1"])
    assert locate_kinks(prob, Segment([0.0], [1.0]), grid=50) == []


def test_degenerate_kink_found_at_origin(sinx_minus_x):
    kinks = locate_kinks(sinx_minus_x, Segment([-1.0], [1.0]), grid=64)
    assert len(kinks) == 1
    assert abs(kinks[0].x[0]) <= 1e-10
    v = check_likq(sinx_minus_x, solve_switching(sinx_minus_x.c, kinks[0].x))
    assert abs(v.first_order.Jz[0, 0]) <= 1e-12


def test_grid_point_on_kink_is_not_duplicated(negsin):
    # grid of 3 hits x = 0 exactly
    kinks = locate_kinks(negsin, Segment([-1.0], [1.0]), grid=3)
    assert [k.x[0] for k in kinks] == [0.0]


def test_kinks_of_chained_switches(three_switch):
    kinks = locate_kinks(three_switch, Segment([-1.0, 2.0], [3.0, -2.0]), grid=101)
    # x(t) = (4t - 1, 2 - 4t): x1 = 0 at t = 1/4, x2 = 0 at t = 1/2, |x1| = |x2| only at t = 3/8
    assert [k.component for k in kinks] == [0, 2, 1]
    np.testing.assert_allclose([k.t for k in kinks], [0.25, 0.375, 0.5], atol=1e-12)
    assert len(distinct_points(kinks)) == 3


def test_invalid_grid(negsin):
    with pytest.raises(ValueError):
        locate_kinks(negsin, Segment([0.0], [1.0]), grid=1)


def test_probe_error_carries_parameter():
    prob = make_problem(1, ["log(x1)"])
    with pytest.raises(ProbeError) as info:
        locate_kinks(prob, Segment([-1.0], [1.0]), grid=5)
    assert info.value.t == 0.0


def test_segment_validation():
    with pytest.raises(ValueError):
        Segment([1.0], [1.0])
    with pytest.raises(ValueError):
        Segment([1.0], [1.0, 2.0])


def test_unconstrained_sampling_accepts_everything(negsin):
    res = sample_feasible(negsin, [(-3, 3)], 25, seed=1)
    assert res.drawn == 25 and len(res.points) == 25
    assert res.acceptance_rate == 1.0
    assert set(res.provenance) == {"direct"}


def test_inequality_filter():
    prob = make_problem(1, ["x1"], g=["x1"])
    res = sample_feasible(prob, [(-1, 1)], 200, seed=2)
    assert all(sol.x[0] >= -1e-8 for sol in res.points)
    assert 0 < len(res.points) < 200
    assert res.rejected_infeasible == 200 - len(res.points)


def test_equality_projection():
    prob = make_problem(2, ["x1 - x2"], h=["x1 + x2"])
    res = sample_feasible(prob, [(-1, 1), (-1, 1)], 30, seed=3)
    assert len(res.points) == 30
    assert all(abs(sol.x[0] + sol.x[1]) <= 1e-8 for sol in res.points)
    assert set(res.provenance) == {"projected"}


def test_nonlinear_equality_projection():
    prob = make_problem(2, ["x1"], h=["x1^2 + x2^2 - 1"])
    res = sample_feasible(prob, [(-2, 2), (-2, 2)], 30, seed=4)
    assert len(res.points) >= 25
    for sol in res.points:
        assert abs(sol.x @ sol.x - 1.0) <= 1e-8


def test_sampling_is_seeded(negsin):
    a = sample_feasible(negsin, [(-3, 3)], 5, seed=(7, 1))
    b = sample_feasible(negsin, [(-3, 3)], 5, seed=(7, 1))
    assert [p.x.tolist() for p in a.points] == [p.x.tolist() for p in b.points]


def test_zero_eps_keeps_values():
    prob = make_problem(2, ["x1 * x2", "sin(y1) + z1"], g=["x1 + 1"], h=["x2 - y2"])
    pert = perturb(prob, 0.0, seed=5)
    rng = np.random.default_rng(0)
    for _ in range(10):
        pt = Point(rng.uniform(-1, 1, 2), rng.uniform(0, 1, 2), rng.uniform(-1, 1, 2))
        for a, b in zip(list(prob.c) + list(prob.g) + list(prob.h), list(pert.c) + list(pert.g) + list(pert.h)):
            assert eval_expr(a, pt) == eval_expr(b, pt)
    assert pert != prob


def test_perturbed_degenerate_kink_has_nonzero_slope(sinx_minus_x):
    eps = 0.01
    for seed in range(10):
        pert_draw = draw_perturbation(sinx_minus_x, eps, seed)
        a1 = pert_draw.c_terms[0].coefficients[0]
        prob = perturb(sinx_minus_x, eps, seed)
        kinks = locate_kinks(prob, Segment([-1.0], [1.0]), grid=128)
        near = [k for k in kinks if abs(k.x[0]) < 0.5]
        assert near
        for k in near:
            v = check_likq(prob, solve_switching(prob.c, k.x))
            xs = k.x[0]
            assert v.first_order.Jz[0, 0] == pytest.approx(math.cos(xs) - 1 + eps * a1, abs=1e-12)
            assert v.holds


def test_perturbation_respects_admissibility():
    prob = make_problem(1, ["x1", "y1 - x1", "z2 * y1"])
    pert = perturb(prob, 0.5, seed=9)
    assert not any(fam in "yz" for fam, _ in free_vars(pert.c[0]))
    assert ("y", 2) not in free_vars(pert.c[1]) and ("z", 2) not in free_vars(pert.c[1])
    assert all(idx <= 2 for fam, idx in free_vars(pert.c[2]) if fam != "x")


def test_perturbation_is_seeded(sinx_minus_x):
    a = draw_perturbation(sinx_minus_x, 0.1, (3, 4))
    b = draw_perturbation(sinx_minus_x, 0.1, (3, 4))
    c = draw_perturbation(sinx_minus_x, 0.1, (3, 5))
    assert a.c_terms[0].coefficients.tolist() == b.c_terms[0].coefficients.tolist()
    assert a.c_terms[0].coefficients.tolist() != c.c_terms[0].coefficients.tolist()


def test_negative_eps_rejected(negsin):
    with pytest.raises(ValueError):
        perturb(negsin, -1e-3, seed=0)


def test_survey_of_degenerate_base(sinx_minus_x):
    rec = survey(sinx_minus_x, [Segment([-4.0], [4.0])], grid=128)
    assert not rec.likq_everywhere
    assert [ch.holds for ch in rec.checks] == [False]


def test_genericity_small_run(sinx_minus_x):
    rep = genericity_experiment(sinx_minus_x, [Segment([-4.0], [4.0])], eps=1e-2, trials=10, seed=3, grid=128)
    assert rep.base_fraction == 0.0
    assert rep.fraction == 1.0
    assert rep.failing_trials == []


def test_genericity_with_constraints_and_box():
    prob = make_problem(2, ["x1 - x2"], g=["1 - x1"], h=["x1 + x2"])
    rep = genericity_experiment(
        prob, [Segment([-2.0, 2.0], [2.0, -2.0])], box=[(-2, 2), (-2, 2)], eps=1e-2, trials=4, seed=1, grid=64, samples=5
    )
    assert rep.base.checks
    assert all(r.error is None for r in rep.records)
    assert any(ch.source == "projected" for ch in rep.records[0].checks)


def test_trial_reproducible_from_its_seed(sinx_minus_x):
    rep = genericity_experiment(sinx_minus_x, [Segment([-4.0], [4.0])], eps=1e-2, trials=3, seed=11, grid=64)
    rec = rep.records[2]
    again = survey(perturb(sinx_minus_x, 1e-2, tuple(rec.seed)), [Segment([-4.0], [4.0])], grid=64)
    assert [ch.x.tolist() for ch in again.checks] == [ch.x.tolist() for ch in rec.checks]
    assert again.likq_everywhere == rec.likq_everywhere
