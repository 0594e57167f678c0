"""Active sets, first-order matrices and the LIKQ verdict.

With ``Sigma = diag(sign z)`` the sensitivities of the switching vector and
constraints with respect to ``x`` are::

    S  = (I - L Sigma - M)^-1
    Jz = S Z
    Jg = Gx + (Gy Sigma + Gz) Jz
    Jh = Hx + (Hy Sigma + Hz) Jz

where ``Z, L, M`` are the partial Jacobians of ``c`` with respect to
``x, y, z`` (``L`` and ``M`` strictly lower triangular) and ``G*``, ``H*``
the corresponding partials of ``g`` and ``h``.  LIKQ holds at a feasible
point when the rows of ``Jz`` for active switches, of ``Jg`` for active
inequalities and all of ``Jh`` are linearly independent.

Index sets (``alpha``, ``beta``) are 0-based positions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .absnormal import AbsNormalProblem, SwitchingSolution, eval_many, solve_switching
from .errors import InfeasibleError, OracleInapplicableError
from .expr import Point, _grad_raw, _value, _finite

DEFAULT_TAU = 1e-8
DEFAULT_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class ActivePattern:
    alpha: tuple
    beta: tuple
    sigma: np.ndarray
    omega: np.ndarray
    tau: float
    g_values: np.ndarray
    h_values: np.ndarray


@dataclass(frozen=True, eq=False)
class FirstOrderData:
    Z: np.ndarray
    L: np.ndarray
    M: np.ndarray
    Gx: np.ndarray
    Gy: np.ndarray
    Gz: np.ndarray
    Hx: np.ndarray
    Hy: np.ndarray
    Hz: np.ndarray
    S: np.ndarray
    Jz: np.ndarray
    Jg: np.ndarray
    Jh: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True, eq=False)
class LikqVerdict:
    holds: bool
    rank: int
    required: int
    matrix: np.ndarray
    singular_values: np.ndarray
    pattern: ActivePattern
    first_order: FirstOrderData

    @property
    def min_singular_value(self):
        """Smallest singular value, or ``None`` for an empty matrix."""
        if self.singular_values.size == 0:
            return None
        return float(self.singular_values.min())


def numerical_rank(A, rtol=DEFAULT_RTOL):
    """Rank of ``A`` by SVD with threshold ``rtol * sigma_max * max(A.shape)``.

    Returns ``(rank, singular_values)``.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0, np.zeros(0)
    sv = np.linalg.svd(A, compute_uv=False)
    smax = sv[0]
    if smax == 0.0:
        return 0, sv
    return int(np.count_nonzero(sv > rtol * smax * max(A.shape))), sv


def snap_signs(z, tau=DEFAULT_TAU):
    """``sign(z)`` with entries ``|z_i| <= tau (1 + ||z||_inf)`` set to zero."""
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        return np.zeros(0, dtype=int)
    scale = tau * (1.0 + np.max(np.abs(z)))
    sigma = np.sign(z).astype(int)
    sigma[np.abs(z) <= scale] = 0
    return sigma


def constraint_tolerances(g, h, tau):
    gtol = tau * (1.0 + (np.max(np.abs(g)) if g.size else 0.0))
    htol = tau * (1.0 + (np.max(np.abs(h)) if h.size else 0.0))
    return gtol, htol


def active_sets(prob: AbsNormalProblem, sol: SwitchingSolution, tau=DEFAULT_TAU) -> ActivePattern:
    """Classify switches and inequalities at a solved point.

    Raises :class:`InfeasibleError` when some ``g_j`` is negative or some
    ``h_j`` nonzero beyond the relative tolerance.
    """
    pt = sol.point
    g = eval_many(prob.g, pt)
    h = eval_many(prob.h, pt)
    gtol, htol = constraint_tolerances(g, h, tau)
    for j, v in enumerate(g):
        if v < -gtol:
            raise InfeasibleError(f"inequality g{j + 1} = {v!r} < 0", f"g{j + 1}", float(v))
    for j, v in enumerate(h):
        if abs(v) > htol:
            raise InfeasibleError(f"equality h{j + 1} = {v!r} != 0", f"h{j + 1}", float(v))
    sigma = snap_signs(sol.z, tau)
    omega = (np.abs(g) > gtol).astype(int)
    return ActivePattern(
        alpha=tuple(int(i) for i in np.flatnonzero(sigma == 0)),
        beta=tuple(int(j) for j in np.flatnonzero(omega == 0)),
        sigma=sigma,
        omega=omega,
        tau=tau,
        g_values=g,
        h_values=h,
    )


def jacobian(exprs, pt: Point) -> np.ndarray:
    """Stacked gradients, shape ``(len(exprs), n + 2s)``."""
    n, s = pt.n, pt.s
    rows = np.zeros((len(exprs), n + 2 * s))
    for k, e in enumerate(exprs):
        _finite(_value(e, pt.x, pt.y, pt.z), e)
        rows[k] = _grad_raw(e, pt.x, pt.y, pt.z, n, s)
    return rows


def split_blocks(J, n, s):
    return J[:, :n], J[:, n : n + s], J[:, n + s :]


def first_order(prob: AbsNormalProblem, sol: SwitchingSolution, pattern) -> FirstOrderData:
    """Assemble the partial Jacobians at ``(x, |z|, z)`` and the propagated ``Jz, Jg, Jh``.

    ``pattern`` is an :class:`ActivePattern` or a sign vector ``sigma``.
    """
    sigma = pattern.sigma if isinstance(pattern, ActivePattern) else np.asarray(pattern, dtype=int)
    n, s = prob.n, prob.s
    pt = sol.point
    Z, L, M = split_blocks(jacobian(prob.c.components, pt), n, s)
    Gx, Gy, Gz = split_blocks(jacobian(prob.g, pt), n, s)
    Hx, Hy, Hz = split_blocks(jacobian(prob.h, pt), n, s)
    Sigma = np.diag(sigma.astype(float))
    A = np.eye(s) - L @ Sigma - M
    if s:
        S = solve_triangular(A, np.eye(s), lower=True, unit_diagonal=True)
    else:
        S = np.zeros((0, 0))
    Jz = S @ Z
    Jg = Gx + (Gy @ Sigma + Gz) @ Jz
    Jh = Hx + (Hy @ Sigma + Hz) @ Jz
    return FirstOrderData(Z, L, M, Gx, Gy, Gz, Hx, Hy, Hz, S, Jz, Jg, Jh, sigma)


def likq_matrix(fo: FirstOrderData, pattern: ActivePattern, n) -> np.ndarray:
    """Rows ``Jz[alpha]``, then ``Jg[beta]``, then ``Jh``."""
    return np.vstack([fo.Jz[list(pattern.alpha), :], fo.Jg[list(pattern.beta), :], fo.Jh])


def check_likq(prob: AbsNormalProblem, sol: SwitchingSolution, tau=DEFAULT_TAU, rtol=DEFAULT_RTOL) -> LikqVerdict:
    pattern = active_sets(prob, sol, tau)
    fo = first_order(prob, sol, pattern)
    matrix = likq_matrix(fo, pattern, prob.n)
    required = len(pattern.alpha) + len(pattern.beta) + prob.q
    rank, sv = numerical_rank(matrix, rtol)
    return LikqVerdict(
        holds=rank == required,
        rank=rank,
        required=required,
        matrix=matrix,
        singular_values=sv,
        pattern=pattern,
        first_order=fo,
    )


def jz_fd_oracle(prob: AbsNormalProblem, x, direction, h=1e-6, tau=DEFAULT_TAU) -> np.ndarray:
    """Central difference of the solution map ``x -> z(x)`` along ``direction``.

    Refuses (``OracleInapplicableError``) when any stencil point has a
    switch with ``|z_i| <= 10 tau`` or the sign pattern changes across the
    stencil, because ``z`` is then not differentiable along the stencil.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float).reshape(x.shape)
    stencil = [solve_switching(prob.c, x + t * d) for t in (-h, 0.0, h)]
    signs = None
    for pt in stencil:
        if np.any(np.abs(pt.z) <= 10 * tau):
            raise OracleInapplicableError("stencil point lies on (or next to) a kink")
        sg = np.sign(pt.z)
        if signs is not None and np.any(sg != signs):
            raise OracleInapplicableError("sign pattern changes across the stencil")
        signs = sg
    return (stencil[2].z - stencil[0].z) / (2.0 * h)


def likq_everywhere(verdicts) -> bool:
    return all(v.holds for v in verdicts)
