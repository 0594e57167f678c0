"""Kink location, feasible sampling and seeded perturbation experiments.

Random streams are derived from ``(seed, trial, ...)`` tuples fed to
:func:`numpy.random.default_rng`, so results never depend on how trials are
distributed over worker processes.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np

from .absnormal import AbsNormalProblem, SwitchingFunction, eval_many, solve_switching, validate
from .analysis import DEFAULT_TAU, DEFAULT_RTOL, check_likq, constraint_tolerances, first_order
from .errors import InfeasibleError, LikqError, ProbeError
from .expr import Binary, Const, Var

log = logging.getLogger(__name__)

DEFAULT_GRID = 512
DEFAULT_TAU_ROOT = 1e-10
DEFAULT_TRIALS = 100
GN_MAX_ITER = 50
GN_MAX_HALVINGS = 20


@dataclass(frozen=True, eq=False)
class Segment:
    """The line ``x(t) = a + t (b - a)``, ``t`` in ``[0, 1]``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if a.shape != b.shape:
            raise ValueError("segment endpoints differ in length")
        if np.array_equal(a, b):
            raise ValueError("segment endpoints coincide")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __call__(self, t):
        return self.a + t * (self.b - self.a)


@dataclass(frozen=True, eq=False)
class Kink:
    t: float
    component: int  # 0-based switch index
    x: np.ndarray
    z_value: float


def _switch_value(c, seg, t, i):
    try:
        return solve_switching(c, seg(t)).z[i]
    except LikqError as exc:
        raise ProbeError(t, exc) from exc


def _bisect(c, seg, i, t0, v0, t1, v1):
    """Shrink ``[t0, t1]`` (opposite signs) until a zero is hit or no float lies between."""
    for _ in range(200):
        tm = 0.5 * (t0 + t1)
        if tm <= t0 or tm >= t1:
            break
        vm = _switch_value(c, seg, tm, i)
        if vm == 0.0:
            return tm, vm
        if (vm < 0) == (v0 < 0):
            t0, v0 = tm, vm
        else:
            t1, v1 = tm, vm
    return (t0, v0) if abs(v0) <= abs(v1) else (t1, v1)


def locate_kinks(prob: AbsNormalProblem, seg: Segment, grid=DEFAULT_GRID, tau_root=DEFAULT_TAU_ROOT):
    """Zeros of every switching component along ``seg``.

    Each component is sampled on ``grid`` equidistant parameters; grid
    values with ``|z_i| <= tau_root`` are returned directly and every strict
    sign change is bisected down to floating-point resolution.  Roots that
    still have ``|z_i| > tau_root`` (extremely steep crossings) are dropped
    with a warning.  The result is sorted by ``(t, component)``.
    """
    if grid < 2:
        raise ValueError("grid must have at least 2 points")
    c = prob.c
    ts = np.linspace(0.0, 1.0, grid)
    values = np.empty((grid, c.s))
    for k, t in enumerate(ts):
        try:
            values[k] = solve_switching(c, seg(t)).z
        except LikqError as exc:
            raise ProbeError(float(t), exc) from exc
    kinks = []
    for i in range(c.s):
        v = values[:, i]
        zero = np.abs(v) <= tau_root
        for k in np.flatnonzero(zero):
            kinks.append(Kink(float(ts[k]), i, seg(ts[k]), float(v[k])))
        for k in range(grid - 1):
            if zero[k] or zero[k + 1] or (v[k] < 0) == (v[k + 1] < 0):
                continue
            t, vt = _bisect(c, seg, i, ts[k], v[k], ts[k + 1], v[k + 1])
            if abs(vt) > tau_root:
                log.warning("component %d: root near t=%r not resolved (|z|=%g)", i + 1, t, abs(vt))
                continue
            kinks.append(Kink(float(t), i, seg(t), float(vt)))
    kinks.sort(key=lambda k: (k.t, k.component))
    return kinks


def distinct_points(kinks, tol=DEFAULT_TAU_ROOT):
    """Merge kinks of different components that sit at the same location."""
    out = []
    for k in kinks:
        if out and np.max(np.abs(out[-1].x - k.x)) <= tol * (1.0 + np.max(np.abs(k.x))):
            continue
        out.append(k)
    return out


# ---------------------------------------------------------------- sampling


@dataclass
class SampleResult:
    points: list = field(default_factory=list)
    provenance: list = field(default_factory=list)
    drawn: int = 0
    rejected_infeasible: int = 0
    nonconvergent: int = 0
    left_box: int = 0

    @property
    def acceptance_rate(self):
        return len(self.points) / self.drawn if self.drawn else 0.0


def _restore_equalities(prob, x, tau):
    """Damped Gauss-Newton on ``h(x, |z(x)|, z(x)) = 0``; returns the solution or ``None``."""
    sol = solve_switching(prob.c, x)
    hv = eval_many(prob.h, sol.point)
    for _ in range(GN_MAX_ITER + 1):
        if np.max(np.abs(hv)) <= tau:
            return sol
        Jh = first_order(prob, sol, np.sign(sol.z).astype(int)).Jh
        step = -np.linalg.lstsq(Jh, hv, rcond=None)[0]
        phi = 0.5 * float(hv @ hv)
        t = 1.0
        for _ in range(GN_MAX_HALVINGS + 1):
            try:
                trial = solve_switching(prob.c, sol.x + t * step)
                htrial = eval_many(prob.h, trial.point)
            except LikqError:
                htrial = None
            if htrial is not None and 0.5 * float(htrial @ htrial) <= (1.0 - 2e-4 * t) * phi:
                break
            t *= 0.5
        else:
            return None
        sol, hv = trial, htrial
    return None


def sample_feasible(prob: AbsNormalProblem, box, count, seed=0, tau=DEFAULT_TAU) -> SampleResult:
    """Draw ``count`` points uniformly from ``box`` and keep the feasible ones.

    With equality constraints every draw is first projected onto ``h = 0``
    by damped Gauss-Newton; draws that do not converge, or whose projection
    leaves the box, are skipped.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    box = np.asarray(box, dtype=float).reshape(prob.n, 2)
    rng = np.random.default_rng(seed)
    result = SampleResult()
    for _ in range(count):
        x = rng.uniform(box[:, 0], box[:, 1])
        result.drawn += 1
        try:
            if prob.q:
                sol = _restore_equalities(prob, x, tau)
                if sol is None:
                    result.nonconvergent += 1
                    continue
                if np.any(sol.x < box[:, 0]) or np.any(sol.x > box[:, 1]):
                    result.left_box += 1
                    continue
                provenance = "projected"
            else:
                sol = solve_switching(prob.c, x)
                provenance = "direct"
            g = eval_many(prob.g, sol.point)
            h = eval_many(prob.h, sol.point)
        except LikqError:
            result.nonconvergent += 1
            continue
        gtol, _ = constraint_tolerances(g, h, tau)
        if np.any(g < -gtol):
            result.rejected_infeasible += 1
            continue
        result.points.append(sol)
        result.provenance.append(provenance)
    return result


# ---------------------------------------------------------------- perturbations


@dataclass(frozen=True, eq=False)
class AffineTerm:
    """``eps * (offset + <coefficients, variables>)``."""

    offset: float
    coefficients: np.ndarray
    variables: tuple


@dataclass(frozen=True, eq=False)
class Perturbation:
    eps: float
    seed: object
    c_terms: tuple
    g_terms: tuple
    h_terms: tuple


def _admissible(n, s, i=None):
    xs = [("x", k) for k in range(1, n + 1)]
    upto = s if i is None else i - 1
    return tuple(xs + [("y", k) for k in range(1, upto + 1)] + [("z", k) for k in range(1, upto + 1)])


def draw_perturbation(prob: AbsNormalProblem, eps, seed) -> Perturbation:
    """Uniform ``[-1, 1]`` coefficients for every component, constraint row and admissible input."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    rng = np.random.default_rng(seed)

    def term(variables):
        offset = float(rng.uniform(-1.0, 1.0))
        return AffineTerm(offset, rng.uniform(-1.0, 1.0, len(variables)), variables)

    n, s = prob.n, prob.s
    return Perturbation(
        eps=float(eps),
        seed=seed,
        c_terms=tuple(term(_admissible(n, s, i)) for i in range(1, s + 1)),
        g_terms=tuple(term(_admissible(n, s)) for _ in prob.g),
        h_terms=tuple(term(_admissible(n, s)) for _ in prob.h),
    )


def _add_term(e, term: AffineTerm, eps):
    delta = Const(eps * term.offset)
    for a, (family, index) in zip(term.coefficients, term.variables):
        delta = Binary("+", delta, Binary("*", Const(eps * float(a)), Var(family, index)))
    return Binary("+", e, delta)


def apply_perturbation(prob: AbsNormalProblem, pert: Perturbation) -> AbsNormalProblem:
    eps = pert.eps
    out = AbsNormalProblem(
        n=prob.n,
        c=SwitchingFunction(prob.n, [_add_term(e, t, eps) for e, t in zip(prob.c, pert.c_terms)]),
        g=[_add_term(e, t, eps) for e, t in zip(prob.g, pert.g_terms)],
        h=[_add_term(e, t, eps) for e, t in zip(prob.h, pert.h_terms)],
        f=prob.f,
        name=f"{prob.name}+perturbed(eps={eps!r})" if prob.name else "",
    )
    validate(out).raise_if_invalid()
    return out


def perturb(prob: AbsNormalProblem, eps, seed) -> AbsNormalProblem:
    """Add seeded affine terms ``eps (a0 + <a1, w>)`` over each piece's admissible inputs ``w``."""
    return apply_perturbation(prob, draw_perturbation(prob, eps, seed))


# ---------------------------------------------------------------- experiments


@dataclass(frozen=True, eq=False)
class PointCheck:
    x: np.ndarray
    source: str  # "kink", "direct" or "projected"
    holds: Optional[bool]
    rank: Optional[int] = None
    required: Optional[int] = None
    min_singular_value: Optional[float] = None
    alpha: tuple = ()
    beta: tuple = ()
    infeasible: bool = False
    error: Optional[str] = None


@dataclass(frozen=True, eq=False)
class TrialRecord:
    trial: int  # -1 for the unperturbed base problem
    seed: object
    kinks: tuple
    checks: tuple
    error: Optional[str] = None

    @property
    def likq_everywhere(self):
        if self.error is not None:
            return False
        return all(ch.infeasible or ch.holds is True for ch in self.checks)


@dataclass(frozen=True, eq=False)
class GenericityReport:
    trials: int
    seed: int
    eps: float
    tau: float
    base: TrialRecord
    records: tuple

    @property
    def fraction(self):
        return sum(r.likq_everywhere for r in self.records) / self.trials

    @property
    def base_fraction(self):
        return 1.0 if self.base.likq_everywhere else 0.0

    @property
    def failing_trials(self):
        return [r.trial for r in self.records if not r.likq_everywhere]


def _check_point(prob, sol, source, tau, rtol):
    try:
        v = check_likq(prob, sol, tau, rtol)
    except InfeasibleError:
        return PointCheck(sol.x, source, None, infeasible=True)
    except LikqError as exc:
        return PointCheck(sol.x, source, None, error=str(exc))
    return PointCheck(
        sol.x,
        source,
        bool(v.holds),
        v.rank,
        v.required,
        v.min_singular_value,
        v.pattern.alpha,
        v.pattern.beta,
    )


def survey(prob, segments=(), box=None, samples=20, seed=0, tau=DEFAULT_TAU, grid=DEFAULT_GRID,
           tau_root=DEFAULT_TAU_ROOT, rtol=DEFAULT_RTOL, trial=-1, record_seed=None):
    """Check LIKQ at the kinks on ``segments`` and (with constraints) at feasible samples from ``box``."""
    kinks, checks = [], []
    try:
        for seg in segments:
            kinks.extend(locate_kinks(prob, seg, grid, tau_root))
        for k in distinct_points(kinks):
            checks.append(_check_point(prob, solve_switching(prob.c, k.x), "kink", tau, rtol))
        if box is not None and prob.p + prob.q > 0:
            res = sample_feasible(prob, box, samples, seed, tau)
            for sol, prov in zip(res.points, res.provenance):
                checks.append(_check_point(prob, sol, prov, tau, rtol))
    except LikqError as exc:
        return TrialRecord(trial, record_seed, tuple(kinks), tuple(checks), error=str(exc))
    return TrialRecord(trial, record_seed, tuple(kinks), tuple(checks))


def _run_trial(trial, prob, segments, box, eps, seed, tau, grid, tau_root, samples, rtol):
    trial_seed = (seed, trial)
    try:
        perturbed = perturb(prob, eps, trial_seed)
    except LikqError as exc:
        return TrialRecord(trial, list(trial_seed), (), (), error=str(exc))
    return survey(perturbed, segments, box, samples, (seed, trial, 1), tau, grid, tau_root, rtol,
                  trial=trial, record_seed=list(trial_seed))


def genericity_experiment(prob: AbsNormalProblem, segments=(), box=None, eps=1e-2, trials=DEFAULT_TRIALS,
                          seed=0, tau=DEFAULT_TAU, grid=DEFAULT_GRID, tau_root=DEFAULT_TAU_ROOT,
                          samples=20, rtol=DEFAULT_RTOL, workers=1) -> GenericityReport:
    """Fraction of seeded perturbations of ``prob`` that satisfy LIKQ at every probed point.

    Trial ``k`` perturbs with the stream ``(seed, k)``; a failing trial is
    reproduced by ``perturb(prob, eps, (seed, k))``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    segments = tuple(segments)
    # trial streams are (seed, k, ...); the base problem samples from (seed, 0, 0)
    base = survey(prob, segments, box, samples, (seed, 0, 0), tau, grid, tau_root, rtol)
    run = partial(_run_trial, prob=prob, segments=segments, box=box, eps=eps, seed=seed, tau=tau,
                  grid=grid, tau_root=tau_root, samples=samples, rtol=rtol)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, range(trials), chunksize=max(1, trials // (4 * workers))))
    else:
        records = [run(k) for k in range(trials)]
    return GenericityReport(trials, seed, float(eps), tau, base, tuple(records))
