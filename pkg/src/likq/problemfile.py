"""Line-oriented problem files.

::

    # comment
    name = example
    n = 2
    s = 3
    z1 = x1
    z2 = x2
    z3 = y1 - y2
    g1 = 1 - x1
    f = y3

Counts ``s``, ``p``, ``q`` default to the number of ``z``/``g``/``h``
lines; when declared they must match.  Switching lines must appear in
ascending order.
"""

import re

from .absnormal import AbsNormalProblem, SwitchingFunction, validate
from .errors import ParseError, ProblemFileError
from .expr import Dims, format_expr, parse_expr

_INDEXED = re.compile(r"([zgh])(\d+)$")
_COUNT_KEYS = ("n", "s", "p", "q")


def parse_problem(text: str) -> AbsNormalProblem:
    header = {}
    header_lines = {}
    pieces = {"z": {}, "g": {}, "h": {}}
    f_entry = None
    last_z = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ProblemFileError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _COUNT_KEYS or key == "name":
            if key in header:
                raise ProblemFileError(f"duplicate key {key!r}", lineno)
            if key != "name":
                try:
                    value = int(value)
                except ValueError:
                    raise ProblemFileError(f"{key} must be an integer, got {value!r}", lineno) from None
                if value < 0:
                    raise ProblemFileError(f"{key} must be non-negative", lineno)
            header[key] = value
            header_lines[key] = lineno
            continue
        if key == "f":
            if f_entry is not None:
                raise ProblemFileError("duplicate objective f", lineno)
            f_entry = (value, lineno)
            continue
        m = _INDEXED.match(key)
        if m is None:
            raise ProblemFileError(f"unknown key {key!r}", lineno)
        family, index = m.group(1), int(m.group(2))
        if index < 1:
            raise ProblemFileError(f"{key}: indices start at 1", lineno)
        if index in pieces[family]:
            raise ProblemFileError(f"duplicate definition of {key}", lineno)
        if family == "z":
            if index != last_z + 1:
                raise ProblemFileError(
                    f"switching component {last_z + 1} undefined (found z{index} instead)", lineno
                )
            last_z = index
        pieces[family][index] = (value, lineno)

    if "n" not in header:
        raise ProblemFileError("missing dimension line 'n = <int>'")
    counts = {"s": ("z", "switching component"), "p": ("g", "inequality constraint"), "q": ("h", "equality constraint")}
    dims = {"n": header["n"]}
    for key, (family, what) in counts.items():
        found = pieces[family]
        declared = header.get(key, max(found, default=0))
        for k in range(1, declared + 1):
            if k not in found:
                raise ProblemFileError(f"{what} {k} undefined", header_lines.get(key))
        extra = [k for k in found if k > declared]
        if extra:
            raise ProblemFileError(
                f"{family}{extra[0]} exceeds declared {key} = {declared}", found[extra[0]][1]
            )
        dims[key] = declared
    dd = Dims(dims["n"], dims["s"], dims["p"], dims["q"])

    def conv(entry, label):
        text, lineno = entry
        try:
            return parse_expr(text, dd)
        except ParseError as exc:
            raise ProblemFileError(f"{label}: {exc}", lineno) from exc

    c = [conv(pieces["z"][k], f"z{k}") for k in range(1, dd.s + 1)]
    g = [conv(pieces["g"][k], f"g{k}") for k in range(1, dd.p + 1)]
    h = [conv(pieces["h"][k], f"h{k}") for k in range(1, dd.q + 1)]
    f = conv(f_entry, "f") if f_entry is not None else None
    prob = AbsNormalProblem(n=dd.n, c=SwitchingFunction(dd.n, c), g=g, h=h, f=f, name=header.get("name", ""))

    report = validate(prob)
    if not report.ok:
        first = report.findings[0]
        m = re.match(r"component (\d+)|([gh])(\d+)|f ", first)
        line = None
        if m and m.group(1):
            line = pieces["z"][int(m.group(1))][1]
        elif m and m.group(2):
            line = pieces[m.group(2)][int(m.group(3))][1]
        elif m:
            line = f_entry[1]
        raise ProblemFileError("validation failed: " + "; ".join(report.findings), line)
    return prob


def load_problem(path) -> AbsNormalProblem:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())


def dump_problem(prob: AbsNormalProblem) -> str:
    lines = []
    if prob.name:
        lines.append(f"name = {prob.name}")
    lines += [f"n = {prob.n}", f"s = {prob.s}", f"p = {prob.p}", f"q = {prob.q}"]
    lines += [f"z{i} = {format_expr(e)}" for i, e in enumerate(prob.c, start=1)]
    lines += [f"g{j} = {format_expr(e)}" for j, e in enumerate(prob.g, start=1)]
    lines += [f"h{j} = {format_expr(e)}" for j, e in enumerate(prob.h, start=1)]
    if prob.f is not None:
        lines.append(f"f = {format_expr(prob.f)}")
    return "\n".join(lines) + "\n"
