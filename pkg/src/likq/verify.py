"""Built-in oracle suite run by ``likq verify``.

Each check compares two independent computations of the same quantity on
one problem and records the worst deviation seen:

``ad_vs_fd``
    forward-mode gradients of every piece against central differences,
    at random points of the full ``(x, y, z)`` space;
``jz_vs_fd``
    ``Jz d`` against differences of the solution map ``x -> z(x)``;
``likq_vs_transversality``
    the LIKQ verdict against the jet transversality verdict, at sampled
    feasible points and located kinks;
``structured_vs_plain``
    lifted (and split) structured transversality against the plain test;
``pi_left_inverse``, ``structured_eval``
    exact identities of the selection operator.
"""

from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

from .absnormal import AbsNormalProblem, eval_many, solve_switching
from .analysis import DEFAULT_RTOL, DEFAULT_TAU, check_likq, first_order, jz_fd_oracle
from .errors import InfeasibleError, LikqError, NotInStratifiedSetError, OracleInapplicableError
from .explore import Segment, distinct_points, locate_kinks, sample_feasible
from .expr import Point, fd_grad_oracle, grad_expr
from .strata import build_pi, check_transversality, structured_eval, structured_transversality

DERIVATIVE_TOL = 1e-6
DEFAULT_BOX_HALFWIDTH = 3.0


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)) / (1.0 + np.max(np.abs(a))))


def _random_jet_point(rng, box, s):
    x = rng.uniform(box[:, 0], box[:, 1]) if len(box) else np.zeros(0)
    return Point(x, rng.uniform(0.0, 2.0, s), rng.uniform(-2.0, 2.0, s))


def derivative_deviation(prob: AbsNormalProblem, pt: Point):
    """Largest AD-vs-FD gap over all pieces at ``pt``; ``None`` if any piece is undefined there."""
    worst = 0.0
    pieces = list(prob.c) + list(prob.g) + list(prob.h) + ([prob.f] if prob.f is not None else [])
    try:
        for e in pieces:
            worst = max(worst, _rel(grad_expr(e, pt), fd_grad_oracle(e, pt)))
    except LikqError:
        return None
    return worst


def jz_deviation(prob: AbsNormalProblem, x, direction, tau=DEFAULT_TAU):
    """``Jz d`` versus the solution-map difference quotient; ``None`` where the oracle does not apply."""
    try:
        fd = jz_fd_oracle(prob, x, direction, tau=tau)
        sol = solve_switching(prob.c, x)
        Jz = first_order(prob, sol, np.sign(sol.z).astype(int)).Jz
    except (OracleInapplicableError, LikqError):
        return None
    return _rel(Jz @ direction, fd)


def agreement_at(prob: AbsNormalProblem, x, tau=DEFAULT_TAU, rtol=DEFAULT_RTOL):
    """Verdicts at the point over ``x``, or ``None`` when it is infeasible.

    Returns ``(likq, transversal, lifted, split)``.
    """
    try:
        sol = solve_switching(prob.c, x)
        likq = check_likq(prob, sol, tau, rtol).holds
        trans = check_transversality(prob, sol.x, sol.y, sol.z, tau, rtol).holds
        rep = structured_transversality(prob, sol.x, tau, rtol)
    except (InfeasibleError, NotInStratifiedSetError):
        return None
    return bool(likq), bool(trans), bool(rep.lifted_holds), bool(rep.split_holds)


def _agreement_task(x, prob, tau, rtol):
    try:
        return agreement_at(prob, x, tau, rtol)
    except LikqError as exc:
        return str(exc)


def _check(name, deviations, skipped, tol):
    worst = max(deviations) if deviations else 0.0
    return {
        "name": name,
        "passed": bool(worst <= tol),
        "cases": len(deviations),
        "skipped": skipped,
        "worst_deviation": worst,
        "tolerance": tol,
    }


def verify_problem(prob: AbsNormalProblem, seed=0, tau=DEFAULT_TAU, rtol=DEFAULT_RTOL, box=None,
                   samples=10, segments=3, grid=128, workers=1) -> dict:
    """Run every oracle on ``prob``; returns a report tree.

    ``box`` defaults to ``[-3, 3]^n``.  ``segments`` random chords of the
    box are scanned for kinks with ``grid`` probes each.
    """
    n, s = prob.n, prob.s
    if box is None:
        box = [(-DEFAULT_BOX_HALFWIDTH, DEFAULT_BOX_HALFWIDTH)] * n
    box = np.asarray(box, dtype=float).reshape(n, 2)

    rng = np.random.default_rng((seed, 1))
    ad, ad_skip = [], 0
    for _ in range(samples):
        dev = derivative_deviation(prob, _random_jet_point(rng, box, s))
        if dev is None:
            ad_skip += 1
        else:
            ad.append(dev)

    rng = np.random.default_rng((seed, 2))
    jz, jz_skip = [], 0
    if n:
        for _ in range(samples):
            x = rng.uniform(box[:, 0], box[:, 1])
            d = rng.standard_normal(n)
            dev = jz_deviation(prob, x, d / np.linalg.norm(d), tau)
            if dev is None:
                jz_skip += 1
            else:
                jz.append(dev)

    # agreement sites: located kinks, plus feasible samples (or the origin when n = 0)
    sites, kink_errors = [], 0
    rng = np.random.default_rng((seed, 3))
    if n:
        kinks = []
        for _ in range(segments):
            a, b = rng.uniform(box[:, 0], box[:, 1]), rng.uniform(box[:, 0], box[:, 1])
            try:
                kinks.extend(locate_kinks(prob, Segment(a, b), grid))
            except (LikqError, ValueError):
                kink_errors += 1
        sites.extend(k.x for k in distinct_points(kinks))
        sampled = sample_feasible(prob, box, samples, (seed, 4), tau)
        sites.extend(sol.x for sol in sampled.points)
    else:
        sites.append(np.zeros(0))

    task = partial(_agreement_task, prob=prob, tau=tau, rtol=rtol)
    if workers > 1 and len(sites) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(task, sites))
    else:
        outcomes = [task(x) for x in sites]

    trans_dev, struct_dev, errors, infeasible = [], [], [], 0
    points = []
    for x, out in zip(sites, outcomes):
        entry = {"x": x.tolist()}
        if out is None:
            infeasible += 1
            entry["infeasible"] = True
        elif isinstance(out, str):
            errors.append(out)
            entry["error"] = out
        else:
            likq, trans, lifted, split = out
            trans_dev.append(0.0 if likq == trans else 1.0)
            struct_dev.append(0.0 if trans == lifted == split else 1.0)
            entry.update(likq=likq, transversal=trans, lifted=lifted, split=split)
        points.append(entry)

    pi = build_pi(n, s, prob.p, prob.q)
    pi_ok = bool(np.array_equal(pi.left_inverse @ pi.matrix, np.eye(pi.d, dtype=np.int64)))
    rng = np.random.default_rng((seed, 5))
    ev, ev_skip = [], 0
    for _ in range(samples):
        pt = _random_jet_point(rng, box, s)
        try:
            plain = eval_many(list(prob.c) + list(prob.g) + list(prob.h), pt)
            lifted = structured_eval(prob, pi, pi.matrix @ pt.flat())
        except LikqError:
            ev_skip += 1
            continue
        ev.append(float(np.max(np.abs(plain - lifted))) if plain.size else 0.0)

    checks = [
        _check("ad_vs_fd", ad, ad_skip, DERIVATIVE_TOL),
        _check("jz_vs_fd", jz, jz_skip, DERIVATIVE_TOL),
        _check("likq_vs_transversality", trans_dev, infeasible + len(errors), 0.0),
        _check("structured_vs_plain", struct_dev, infeasible + len(errors), 0.0),
        {"name": "pi_left_inverse", "passed": pi_ok, "cases": 1, "skipped": 0,
         "worst_deviation": 0.0 if pi_ok else 1.0, "tolerance": 0.0},
        _check("structured_eval", ev, ev_skip, 0.0),
    ]
    return {
        "passed": all(c["passed"] for c in checks) and not errors,
        "checks": checks,
        "points": points,
        "kink_scan_errors": kink_errors,
        "errors": errors,
    }
