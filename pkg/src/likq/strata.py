"""Stratified jet space, transversality and the structured (lifted) jet.

Jet coordinates are ordered ``(x, y, z, c, g, h)`` with block sizes
``n, s, s, s, p, q``; ``d = n + 2s`` and ``m = s + p + q``.  The set

    A = {y = |z|, z = c, g >= 0, h = 0}

splits into strata indexed by ``sigma = sign(z)`` and ``omega = sign(g)``.
The tangent space of a stratum is spanned by the ``x`` axes, one column
``(|sigma_i|, sigma_i, sigma_i)`` on the ``(y_i, z_i, c_i)`` coordinates for
every nonzero ``sigma_i`` and one ``g_j`` axis for every ``omega_j = 1``.

Transversality of the 0-jet is tested as
``rank [D j0 | B] = d + m`` with ``D j0 = [I_d; D(c, g, h)]``.  The lifted
variant multiplies inputs by the 0/1 selection operator ``Pi`` that feeds
every switching component only its admissible inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import null_space

from .absnormal import AbsNormalProblem, eval_many, solve_switching
from .analysis import (
    DEFAULT_RTOL,
    DEFAULT_TAU,
    check_likq,
    constraint_tolerances,
    jacobian,
    numerical_rank,
    snap_signs,
)
from .errors import IncompatibleSignatureError, NotInStratifiedSetError
from .expr import Point


@dataclass(frozen=True, eq=False)
class JetPoint:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    c_val: np.ndarray
    g_val: np.ndarray
    h_val: np.ndarray

    def flat(self):
        return np.concatenate([self.x, self.y, self.z, self.c_val, self.g_val, self.h_val])


@dataclass(frozen=True, eq=False)
class Stratum:
    sigma: tuple
    omega: tuple
    basis: np.ndarray

    @property
    def dimension(self):
        return self.basis.shape[1]


@dataclass(frozen=True, eq=False)
class TransversalityReport:
    holds: bool
    rank: int
    required: int
    matrix: np.ndarray
    singular_values: np.ndarray
    sigma: np.ndarray
    omega: np.ndarray


def jet(prob: AbsNormalProblem, x, y, z) -> JetPoint:
    """``(x, y, z, c(x,y,z), g(x,y,z), h(x,y,z))``; ``y`` is a free input here."""
    pt = Point(x, y, z)
    return JetPoint(
        x=np.array(pt.x),
        y=np.array(pt.y),
        z=np.array(pt.z),
        c_val=eval_many(prob.c.components, pt),
        g_val=eval_many(prob.g, pt),
        h_val=eval_many(prob.h, pt),
    )


def membership(jp: JetPoint, tau=DEFAULT_TAU) -> Optional[tuple]:
    """Signature ``(sigma, omega)`` of the stratum containing ``jp``, or ``None`` if ``jp`` is not in A."""
    z = jp.z
    ztol = tau * (1.0 + (np.max(np.abs(z)) if z.size else 0.0))
    if z.size and (np.max(np.abs(jp.y - np.abs(z))) > ztol or np.max(np.abs(z - jp.c_val)) > ztol):
        return None
    gtol, htol = constraint_tolerances(jp.g_val, jp.h_val, tau)
    if np.any(jp.g_val < -gtol) or np.any(np.abs(jp.h_val) > htol):
        return None
    sigma = snap_signs(z, tau)
    omega = (np.abs(jp.g_val) > gtol).astype(int)
    return sigma, omega


def tangent_basis(sigma, omega, n, q) -> np.ndarray:
    """Columns: x axes, then one column per nonzero ``sigma_i``, then per ``omega_j = 1``."""
    sigma = np.asarray(sigma, dtype=int).reshape(-1)
    omega = np.asarray(omega, dtype=int).reshape(-1)
    s, p = sigma.size, omega.size
    rows = n + 3 * s + p + q
    cols = []
    for k in range(n):
        col = np.zeros(rows)
        col[k] = 1.0
        cols.append(col)
    for i in np.flatnonzero(sigma):
        col = np.zeros(rows)
        col[n + i] = abs(sigma[i])
        col[n + s + i] = sigma[i]
        col[n + 2 * s + i] = sigma[i]
        cols.append(col)
    for j in np.flatnonzero(omega):
        col = np.zeros(rows)
        col[n + 3 * s + j] = 1.0
        cols.append(col)
    if not cols:
        return np.zeros((rows, 0))
    return np.column_stack(cols)


def stratum(sigma, omega, n, q) -> Stratum:
    return Stratum(tuple(int(v) for v in sigma), tuple(int(v) for v in omega), tangent_basis(sigma, omega, n, q))


def iter_signatures(s, p):
    """All ``(sigma, omega)`` in ``{-1,0,1}^s x {0,1}^p``."""
    for sigma in itertools.product((-1, 0, 1), repeat=s):
        for omega in itertools.product((0, 1), repeat=p):
            yield sigma, omega


def stratification_dimension(n, s, p) -> int:
    """Largest stratum dimension, attained with every ``sigma_i != 0`` and every ``omega_j = 1``."""
    return n + s + p


def jet_derivative(prob: AbsNormalProblem, x, y, z) -> np.ndarray:
    """``D j0 = [I_d; D(c, g, h)]`` at ``(x, y, z)``, shape ``(d + m, d)``."""
    pt = Point(x, y, z)
    Dphi = jacobian(prob.c.components + prob.g + prob.h, pt)
    return np.vstack([np.eye(prob.d), Dphi])


def check_transversality(prob: AbsNormalProblem, x, y, z, tau=DEFAULT_TAU, rtol=DEFAULT_RTOL) -> TransversalityReport:
    jp = jet(prob, x, y, z)
    sig = membership(jp, tau)
    if sig is None:
        raise NotInStratifiedSetError("jet point is not in the stratified set A")
    sigma, omega = sig
    B = tangent_basis(sigma, omega, prob.n, prob.q)
    matrix = np.hstack([jet_derivative(prob, x, y, z), B])
    required = prob.d + prob.m
    rank, sv = numerical_rank(matrix, rtol)
    return TransversalityReport(rank == required, rank, required, matrix, sv, sigma, omega)


def likq_transversality_agree(prob: AbsNormalProblem, x, tau=DEFAULT_TAU, rtol=DEFAULT_RTOL):
    """``(LIKQ holds, 0-jet is transversal)`` at the feasible point over ``x``; the pair is always equal."""
    sol = solve_switching(prob.c, x)
    likq = check_likq(prob, sol, tau, rtol)
    trans = check_transversality(prob, sol.x, sol.y, sol.z, tau, rtol)
    return likq.holds, trans.holds


def whitney_refinement_check(sigma, omega, sigma_lim, omega_lim, n, q) -> bool:
    """Is the tangent space of the limit stratum contained in that of the approaching stratum?

    Limit signatures must agree with the approaching ones or vanish
    entrywise, otherwise :class:`IncompatibleSignatureError` is raised.
    """
    sigma, omega = np.asarray(sigma, dtype=int), np.asarray(omega, dtype=int)
    sigma_lim, omega_lim = np.asarray(sigma_lim, dtype=int), np.asarray(omega_lim, dtype=int)
    if sigma.shape != sigma_lim.shape or omega.shape != omega_lim.shape:
        raise IncompatibleSignatureError("signature lengths differ")
    if np.any((sigma_lim != sigma) & (sigma_lim != 0)) or np.any((omega_lim != omega) & (omega_lim != 0)):
        raise IncompatibleSignatureError("limit signature is not a refinement of the stratum signature")
    B = tangent_basis(sigma, omega, n, q)
    B_lim = tangent_basis(sigma_lim, omega_lim, n, q)
    return np.linalg.matrix_rank(np.hstack([B_lim, B])) == np.linalg.matrix_rank(B)


# ---------------------------------------------------------------- structured jets


@dataclass(frozen=True, eq=False)
class PiOperator:
    n: int
    s: int
    p: int
    q: int
    blocks: tuple
    matrix: np.ndarray
    left_inverse: np.ndarray

    @property
    def d(self):
        return self.n + 2 * self.s

    @property
    def block_sizes(self):
        return tuple(b.shape[0] for b in self.blocks)

    @property
    def offsets(self):
        return tuple(np.concatenate([[0], np.cumsum(self.block_sizes)[:-1]]).astype(int))

    @property
    def lifted_dim(self):
        return self.matrix.shape[0]


def build_pi(n, s, p, q) -> PiOperator:
    """Selection operator stacking the inputs of ``c_1..c_s``, then ``(x, y, z)`` twice for ``g`` and ``h``."""
    d = n + 2 * s
    blocks = []
    for i in range(1, s + 1):
        cols = list(range(n)) + [n + j for j in range(i - 1)] + [n + s + j for j in range(i - 1)]
        block = np.zeros((len(cols), d), dtype=np.int64)
        block[np.arange(len(cols)), cols] = 1
        blocks.append(block)
    blocks.append(np.eye(d, dtype=np.int64))
    blocks.append(np.eye(d, dtype=np.int64))
    matrix = np.vstack(blocks)
    left_inverse = np.zeros((d, matrix.shape[0]), dtype=np.int64)
    left_inverse[:, matrix.shape[0] - d :] = np.eye(d, dtype=np.int64)
    return PiOperator(n, s, p, q, tuple(blocks), matrix, left_inverse)


def _component_inputs(prob, pi: PiOperator, wbreve):
    """Yield ``(expr, point)`` for each structured component fed its own input block."""
    n, s = prob.n, prob.s
    wbreve = np.asarray(wbreve, dtype=float)
    for i, (block, off) in enumerate(zip(pi.blocks, pi.offsets)):
        w_i = wbreve[off : off + block.shape[0]]
        pt = Point.from_flat(block.T @ w_i, n, s)
        if i < s:
            yield [prob.c[i]], pt
        elif i == s:
            yield list(prob.g), pt
        else:
            yield list(prob.h), pt


def structured_eval(prob: AbsNormalProblem, pi: PiOperator, wbreve) -> np.ndarray:
    """``(c_1(w_1), ..., c_s(w_s), g(w_{s+1}), h(w_{s+2}))``."""
    parts = [eval_many(exprs, pt) for exprs, pt in _component_inputs(prob, pi, wbreve)]
    return np.concatenate(parts) if parts else np.zeros(0)


def structured_derivative(prob: AbsNormalProblem, pi: PiOperator, wbreve) -> np.ndarray:
    """Block-diagonal Jacobian of the structured evaluation, shape ``(m, lifted_dim)``."""
    out = np.zeros((prob.m, pi.lifted_dim))
    row = 0
    for (exprs, pt), block, off in zip(_component_inputs(prob, pi, wbreve), pi.blocks, pi.offsets):
        J = jacobian(exprs, pt)
        out[row : row + len(exprs), off : off + block.shape[0]] = J @ block.T
        row += len(exprs)
    return out


@dataclass(frozen=True, eq=False)
class StructuredReport:
    plain: TransversalityReport
    lifted_holds: bool
    lifted_rank: int
    split_holds: bool
    split_rank: int
    required: int
    lifted_matrix: np.ndarray


def structured_transversality(prob: AbsNormalProblem, x, tau=DEFAULT_TAU, rtol=DEFAULT_RTOL) -> StructuredReport:
    """Plain and lifted transversality at the feasible point over ``x``.

    The lifted test is ``rank [I, Pi B_d; D phi_s(Pi w), B_m] = dl + m``
    with ``dl`` the lifted input dimension.  The split test rewrites the
    same condition with a basis ``Lam`` of the orthogonal complement of
    ``img Pi`` as ``rank [I 0 0; 0 I B_d; D Lam, D Pi, B_m]``.
    """
    sol = solve_switching(prob.c, x)
    plain = check_transversality(prob, sol.x, sol.y, sol.z, tau, rtol)
    pi = build_pi(prob.n, prob.s, prob.p, prob.q)
    P = pi.matrix.astype(float)
    w = np.concatenate([sol.x, sol.y, sol.z])
    wbreve = P @ w
    B = tangent_basis(plain.sigma, plain.omega, prob.n, prob.q)
    Bd, Bm = B[: prob.d], B[prob.d :]
    D = structured_derivative(prob, pi, wbreve)
    dl, m = pi.lifted_dim, prob.m
    required = dl + m

    lifted = np.block([[np.eye(dl), P @ Bd], [D, Bm]])
    lifted_rank, _ = numerical_rank(lifted, rtol)

    Lam = null_space(P.T)
    k = Lam.shape[1]
    t = B.shape[1]
    split = np.block(
        [
            [np.eye(k), np.zeros((k, prob.d)), np.zeros((k, t))],
            [np.zeros((prob.d, k)), np.eye(prob.d), Bd],
            [D @ Lam, D @ P, Bm],
        ]
    )
    split_rank, _ = numerical_rank(split, rtol)
    return StructuredReport(
        plain=plain,
        lifted_holds=lifted_rank == required,
        lifted_rank=lifted_rank,
        split_holds=split_rank == required,
        split_rank=split_rank,
        required=required,
        lifted_matrix=lifted,
    )


def structured_transversality_agree(prob: AbsNormalProblem, x, tau=DEFAULT_TAU, rtol=DEFAULT_RTOL):
    """``(plain transversal, lifted transversal)`` at the feasible point over ``x``."""
    rep = structured_transversality(prob, x, tau, rtol)
    return rep.plain.holds, rep.lifted_holds
