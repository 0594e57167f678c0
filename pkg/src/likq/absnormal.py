"""Abs-normal problems: switching functions, the switching equation, evaluation procedures.

A problem is given by a strictly triangular switching function
``c = (c_1, ..., c_s)`` where ``c_i`` reads ``x`` and only
``y_1..y_{i-1}``, ``z_1..z_{i-1}``, together with inequality constraints
``g`` (``p`` rows), equality constraints ``h`` (``q`` rows) and an optional
objective ``f``.  For every ``x`` the switching equation
``z = c(x, |z|, z)`` has the unique solution obtained by evaluating the
components in order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, SwitchingError, ValidationError
from .expr import Dims, Expr, Point, _value, eval_expr, free_vars, parse_expr


@dataclass(frozen=True)
class SwitchingFunction:
    n: int
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def s(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i):
        return self.components[i]


@dataclass(frozen=True)
class AbsNormalProblem:
    """Dimensions ``n, s, p, q`` are derived from the expression lists."""

    n: int
    c: SwitchingFunction
    g: tuple = ()
    h: tuple = ()
    f: Optional[Expr] = None
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.c, SwitchingFunction):
            object.__setattr__(self, "c", SwitchingFunction(self.n, self.c))
        object.__setattr__(self, "g", tuple(self.g))
        object.__setattr__(self, "h", tuple(self.h))

    @property
    def s(self):
        return self.c.s

    @property
    def p(self):
        return len(self.g)

    @property
    def q(self):
        return len(self.h)

    @property
    def dims(self):
        return Dims(self.n, self.s, self.p, self.q)

    @property
    def d(self):
        return self.n + 2 * self.s

    @property
    def m(self):
        return self.s + self.p + self.q


def make_problem(n, c=(), g=(), h=(), f=None, name="", validate_now=True) -> AbsNormalProblem:
    """Build a problem from expression strings (or trees) and validate it."""
    s = len(c)
    dims = Dims(n, s, len(g), len(h))

    def conv(e):
        return parse_expr(e, dims) if isinstance(e, str) else e

    prob = AbsNormalProblem(
        n=n,
        c=SwitchingFunction(n, [conv(e) for e in c]),
        g=[conv(e) for e in g],
        h=[conv(e) for e in h],
        f=None if f is None else conv(f),
        name=name,
    )
    if validate_now:
        validate(prob).raise_if_invalid()
    return prob


@dataclass
class ValidationReport:
    findings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.findings

    def raise_if_invalid(self):
        if self.findings:
            raise ValidationError(self.findings)


def _range_findings(label, e, n, s):
    out = []
    for family, index in sorted(free_vars(e)):
        bound = n if family == "x" else s
        if index > bound:
            what = "n" if family == "x" else "s"
            out.append(f"{label} references {family}{index} beyond {what} = {bound}")
    return out


def validate(prob: AbsNormalProblem) -> ValidationReport:
    """Collect every triangularity and dimension violation of ``prob``."""
    report = ValidationReport()
    n, s = prob.n, prob.s
    if prob.c.n != n:
        report.findings.append(f"switching function declared for n = {prob.c.n}, problem has n = {n}")
    for i, ci in enumerate(prob.c, start=1):
        for family, index in sorted(free_vars(ci)):
            if family == "x":
                if index > n:
                    report.findings.append(f"component {i} references x{index} beyond n = {n}")
            elif i == 1:
                report.findings.append(
                    f"component 1 references {family}{index} (only x variables allowed)"
                )
            elif index >= i:
                report.findings.append(f"component {i} references {family}{index} (j >= i)")
    for label, exprs in (("g", prob.g), ("h", prob.h)):
        for j, e in enumerate(exprs, start=1):
            report.findings.extend(_range_findings(f"{label}{j}", e, n, s))
    if prob.f is not None:
        report.findings.extend(_range_findings("f", prob.f, n, s))
    return report


@dataclass(frozen=True, eq=False)
class SwitchingSolution:
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    residual: float

    @property
    def point(self) -> Point:
        return Point(self.x, self.y, self.z)


def _as_x(c, x):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != c.n:
        raise ValueError(f"expected x of length {c.n}, got {x.size}")
    return x


def residual(c: SwitchingFunction, x, z) -> float:
    """Infinity norm of ``z - c(x, |z|, z)``; zero when ``s = 0``."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != c.s:
        raise ValueError(f"expected z of length {c.s}, got {z.size}")
    if c.s == 0:
        return 0.0
    p = Point(_as_x(c, x), np.abs(z), z)
    cz = np.array([eval_expr(ci, p) for ci in c])
    return float(np.max(np.abs(z - cz)))


def solve_switching(c: SwitchingFunction, x) -> SwitchingSolution:
    """Forward substitution ``z_i = c_i(x, |z_<i|, z_<i)``."""
    x = _as_x(c, x)
    xs = tuple(float(v) for v in x)
    y = [0.0] * c.s
    z = [0.0] * c.s
    for i, ci in enumerate(c):
        try:
            zi = _value(ci, xs, y, z)
        except DomainError as exc:
            raise SwitchingError(i + 1, exc) from exc
        if not np.isfinite(zi):
            raise SwitchingError(i + 1, DomainError("non-finite result", ci))
        z[i] = float(zi)
        y[i] = abs(z[i])
    z = np.array(z)
    return SwitchingSolution(x=x, z=z, y=np.abs(z), residual=residual(c, x, z))


def evaluate_procedure(prob: AbsNormalProblem, target: str, x):
    """``f(x, |z|, z)`` (scalar) or the ``g``/``h`` vector with ``z`` from the switching equation."""
    sol = solve_switching(prob.c, x)
    pt = sol.point
    if target == "f":
        if prob.f is None:
            raise ValueError("problem has no objective f")
        return eval_expr(prob.f, pt)
    if target in ("g", "h"):
        exprs = prob.g if target == "g" else prob.h
        return np.array([eval_expr(e, pt) for e in exprs])
    raise ValueError(f"target must be 'f', 'g' or 'h', not {target!r}")


def eval_many(exprs: Sequence[Expr], pt: Point) -> np.ndarray:
    return np.array([eval_expr(e, pt) for e in exprs], dtype=float)
