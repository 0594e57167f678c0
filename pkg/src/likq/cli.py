"""Command line interface.

Every command prints one JSON document (or a plain-text rendering with
``--pretty``).  Indices in reports are 1-based.  Exit status is 0 whenever
the analysis ran, including when LIKQ fails; I/O, parse, validation and
flag errors exit with 2.
"""

import argparse
import math
import re
import sys

import numpy as np

from . import __version__
from .absnormal import solve_switching
from .analysis import DEFAULT_RTOL, DEFAULT_TAU, check_likq
from .errors import InfeasibleError, LikqError, NotInStratifiedSetError, ProblemFileError
from .explore import (
    DEFAULT_GRID,
    DEFAULT_TAU_ROOT,
    Segment,
    distinct_points,
    genericity_experiment,
    locate_kinks,
    sample_feasible,
)
from .generate import random_problem
from .problemfile import dump_problem, load_problem
from .report import dumps, render_pretty, to_tree
from .strata import check_transversality
from .verify import verify_problem

_PI_TERM = re.compile(r"^([+-]?)(?:([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*\*\s*)?pi$")


class UsageError(Exception):
    pass


def parse_real(token: str) -> float:
    """A decimal, ``pi``, or a scaled multiple such as ``-2*pi``."""
    tok = token.strip().lower()
    m = _PI_TERM.match(tok)
    if m:
        scale = float(m.group(2)) if m.group(2) else 1.0
        return (-scale if m.group(1) == "-" else scale) * math.pi
    try:
        value = float(tok)
    except ValueError:
        raise UsageError(f"not a number: {token!r}") from None
    if not math.isfinite(value):
        raise UsageError(f"not a finite number: {token!r}")
    return value


def parse_vector(text: str, n: int, what="point") -> np.ndarray:
    parts = [p for p in text.split(",")] if text.strip() else []
    if len(parts) != n:
        raise UsageError(f"{what} needs {n} comma-separated values, got {len(parts)}")
    return np.array([parse_real(p) for p in parts], dtype=float)


def parse_box(text: str, n: int) -> np.ndarray:
    """``lo:hi,lo:hi,...``; a single interval is repeated for every coordinate."""
    intervals = text.split(",")
    if len(intervals) == 1 and n > 1:
        intervals = intervals * n
    if len(intervals) != n:
        raise UsageError(f"box needs {n} intervals, got {len(intervals)}")
    box = []
    for iv in intervals:
        if iv.count(":") != 1:
            raise UsageError(f"interval {iv!r} is not of the form lo:hi")
        lo, hi = (parse_real(v) for v in iv.split(":"))
        if not lo < hi:
            raise UsageError(f"interval {iv!r} has lo >= hi")
        box.append((lo, hi))
    return np.array(box, dtype=float).reshape(n, 2)


def _idx(seq):
    return [int(i) + 1 for i in seq]


def _header(args, prob, **tolerances):
    return {
        "tool": "likq",
        "version": __version__,
        "command": args.command,
        "problem": None if prob is None else {"name": prob.name, "n": prob.n, "s": prob.s, "p": prob.p, "q": prob.q},
        "seed": args.seed,
        "tolerances": {"tau": args.tol, "rtol": args.rtol, **tolerances},
    }


def point_report(prob, x, tau, rtol) -> dict:
    """LIKQ and transversality at the point over ``x``; infeasibility is reported in-band."""
    sol = solve_switching(prob.c, x)
    out = {"x": sol.x, "z": sol.z, "y": sol.y}
    try:
        v = check_likq(prob, sol, tau, rtol)
    except InfeasibleError as exc:
        out.update(feasible=False, violation={"constraint": exc.constraint, "value": exc.value})
        return out
    pat = v.pattern
    try:
        t = check_transversality(prob, sol.x, sol.y, sol.z, tau, rtol)
        trans = {"holds": bool(t.holds), "rank": t.rank, "required": t.required, "singular_values": t.singular_values}
    except NotInStratifiedSetError as exc:
        trans = {"holds": None, "error": str(exc)}
    out.update(
        feasible=True,
        alpha=_idx(pat.alpha),
        beta=_idx(pat.beta),
        sigma=pat.sigma,
        omega=pat.omega,
        g=pat.g_values,
        h=pat.h_values,
        likq={
            "holds": bool(v.holds),
            "rank": v.rank,
            "required": v.required,
            "min_singular_value": v.min_singular_value,
            "singular_values": v.singular_values,
            "matrix": v.matrix,
        },
        transversality=trans,
        agree=trans["holds"] == bool(v.holds),
    )
    return out


def _segment(args, n):
    if args.start is None and args.end is None:
        return None
    if args.start is None or args.end is None:
        raise UsageError("--start and --end must be given together")
    a, b = parse_vector(args.start, n, "--start"), parse_vector(args.end, n, "--end")
    try:
        return Segment(a, b)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_grid(grid):
    if grid < 2:
        raise UsageError(f"--grid must be at least 2, got {grid}")


def _kink_entries(prob, kinks, tau, rtol):
    entries = []
    for k in kinks:
        entries.append({"t": k.t, "component": k.component + 1, "x": k.x, "z_value": k.z_value})
    checks = []
    for k in distinct_points(kinks):
        checks.append(point_report(prob, k.x, tau, rtol))
    return entries, checks


def cmd_check(prob, args):
    if args.point is None:
        raise UsageError("check needs --point")
    x = parse_vector(args.point, prob.n)
    return {**_header(args, prob), "result": point_report(prob, x, args.tol, args.rtol)}


def cmd_kinks(prob, args):
    _check_grid(args.grid)
    seg = _segment(args, prob.n)
    if seg is None:
        raise UsageError("kinks needs --start and --end")
    kinks = locate_kinks(prob, seg, args.grid, args.tau_root)
    entries, checks = _kink_entries(prob, kinks, args.tol, args.rtol)
    return {
        **_header(args, prob, tau_root=args.tau_root),
        "result": {
            "segment": {"start": seg.a, "end": seg.b, "grid": args.grid},
            "kinks": entries,
            "points": checks,
            "likq_everywhere": all(c.get("likq", {}).get("holds", True) for c in checks),
        },
    }


def cmd_scan(prob, args):
    _check_grid(args.grid)
    seg = _segment(args, prob.n)
    if seg is None and args.box is None:
        raise UsageError("scan needs --start/--end or --box")
    result = {}
    checks = []
    if seg is not None:
        grid_points = []
        for t in np.linspace(0.0, 1.0, args.grid):
            entry = point_report(prob, seg(t), args.tol, args.rtol)
            grid_points.append({"t": float(t), **entry})
        kinks = locate_kinks(prob, seg, args.grid, args.tau_root)
        entries, kchecks = _kink_entries(prob, kinks, args.tol, args.rtol)
        result["segment"] = {"start": seg.a, "end": seg.b, "grid": args.grid}
        result["grid_points"] = grid_points
        result["kinks"] = entries
        result["kink_points"] = kchecks
        checks += grid_points + kchecks
    if args.box is not None:
        box = parse_box(args.box, prob.n)
        res = sample_feasible(prob, box, args.samples, args.seed, args.tol)
        samples = []
        for sol, prov in zip(res.points, res.provenance):
            samples.append({"provenance": prov, **point_report(prob, sol.x, args.tol, args.rtol)})
        result["box"] = box
        result["sampling"] = {
            "drawn": res.drawn,
            "accepted": len(res.points),
            "rejected_infeasible": res.rejected_infeasible,
            "nonconvergent": res.nonconvergent,
            "left_box": res.left_box,
        }
        result["samples"] = samples
        checks += samples
    feasible = [c for c in checks if c.get("feasible")]
    result["feasible_points"] = len(feasible)
    result["likq_everywhere"] = all(c["likq"]["holds"] for c in feasible)
    return {**_header(args, prob, tau_root=args.tau_root), "result": result}


def _trial_tree(rec):
    return {
        "trial": rec.trial,
        "seed": rec.seed,
        "likq_everywhere": rec.likq_everywhere,
        "error": rec.error,
        "kinks": [{"t": k.t, "component": k.component + 1, "x": k.x, "z_value": k.z_value} for k in rec.kinks],
        "points": [
            {
                "x": ch.x,
                "source": ch.source,
                "holds": ch.holds,
                "rank": ch.rank,
                "required": ch.required,
                "min_singular_value": ch.min_singular_value,
                "alpha": _idx(ch.alpha),
                "beta": _idx(ch.beta),
                "infeasible": ch.infeasible,
                "error": ch.error,
            }
            for ch in rec.checks
        ],
    }


def genericity_tree(rep) -> dict:
    return {
        "trials": rep.trials,
        "eps": rep.eps,
        "fraction": rep.fraction,
        "base_fraction": rep.base_fraction,
        "failing_trials": rep.failing_trials,
        "base": _trial_tree(rep.base),
        "records": [_trial_tree(r) for r in rep.records],
    }


def cmd_perturb(prob, args):
    _check_grid(args.grid)
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if not args.eps > 0:
        raise UsageError("--eps must be positive")
    seg = _segment(args, prob.n)
    box = parse_box(args.box, prob.n) if args.box is not None else None
    if seg is None and box is None:
        raise UsageError("perturb needs --start/--end or --box")
    rep = genericity_experiment(
        prob,
        segments=() if seg is None else (seg,),
        box=box,
        eps=args.eps,
        trials=args.trials,
        seed=args.seed,
        tau=args.tol,
        grid=args.grid,
        tau_root=args.tau_root,
        samples=args.samples,
        rtol=args.rtol,
        workers=args.workers,
    )
    return {**_header(args, prob, tau_root=args.tau_root), "result": genericity_tree(rep)}


def cmd_verify(prob, args):
    _check_grid(args.grid)
    box = parse_box(args.box, prob.n) if args.box is not None else None
    rep = verify_problem(prob, seed=args.seed, tau=args.tol, rtol=args.rtol, box=box, samples=args.samples,
                         segments=args.segments, grid=args.grid, workers=args.workers)
    return {**_header(args, prob), "result": rep}


def cmd_random(args) -> str:
    try:
        dims = [int(v) for v in args.dims.split(",")]
    except ValueError:
        raise UsageError(f"--dims must be four integers n,s,p,q, got {args.dims!r}") from None
    if len(dims) != 4 or min(dims) < 0:
        raise UsageError(f"--dims must be four non-negative integers n,s,p,q, got {args.dims!r}")
    return dump_problem(random_problem(*dims, seed=args.seed))


COMMANDS = {"check": cmd_check, "scan": cmd_scan, "kinks": cmd_kinks, "perturb": cmd_perturb, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--tol", type=float, default=DEFAULT_TAU, help="activity tolerance tau (default 1e-8)")
    shared.add_argument("--rtol", type=float, default=DEFAULT_RTOL, help="relative SVD rank threshold")
    shared.add_argument("--seed", type=int, default=0)
    shared.add_argument("--pretty", action="store_true", help="plain-text tables instead of JSON")
    shared.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")

    segment = argparse.ArgumentParser(add_help=False)
    segment.add_argument("--start", help="segment start, e.g. -4 or 0,pi")
    segment.add_argument("--end", help="segment end")
    segment.add_argument("--grid", type=int, default=DEFAULT_GRID, help="probes per segment")
    segment.add_argument("--tau-root", type=float, default=DEFAULT_TAU_ROOT, dest="tau_root")

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--box", help="sampling box lo:hi[,lo:hi...]")
    sampling.add_argument("--samples", type=int, default=20)

    parser = argparse.ArgumentParser(prog="likq", description="LIKQ analysis of abs-normal problems.")
    parser.add_argument("--version", action="version", version=f"likq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[shared], help="LIKQ and transversality at one point")
    p.add_argument("problem")
    p.add_argument("--point", help="comma-separated coordinates; pi and k*pi accepted (use --point=-1,2)")

    p = sub.add_parser("kinks", parents=[shared, segment], help="locate kinks on a segment")
    p.add_argument("problem")

    p = sub.add_parser("scan", parents=[shared, segment, sampling], help="LIKQ along a segment or over a box")
    p.add_argument("problem")

    p = sub.add_parser("perturb", parents=[shared, segment, sampling], help="seeded perturbation experiment")
    p.add_argument("problem")
    p.add_argument("--eps", type=float, default=1e-2)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("verify", parents=[shared, sampling], help="run the oracle suite on a problem")
    p.add_argument("problem")
    p.add_argument("--segments", type=int, default=3, help="random chords scanned for kinks")
    p.add_argument("--grid", type=int, default=128)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(samples=10)

    p = sub.add_parser("random", parents=[shared], help="print a random valid problem file")
    p.add_argument("--dims", required=True, help="n,s,p,q")
    return parser


def run(argv=None):
    """Parse ``argv`` and execute; returns ``(exit_code, text, out_path)``."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed < 0:
        parser.error("--seed must be non-negative")
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be at least 1")
    if getattr(args, "samples", 1) < 1:
        parser.error("--samples must be at least 1")
    try:
        if args.command == "random":
            return 0, cmd_random(args), args.out
        prob = load_problem(args.problem)
        tree = to_tree(COMMANDS[args.command](prob, args))
    except UsageError as exc:
        parser.error(str(exc))
    except OSError as exc:
        return 2, f"likq: error: {exc}", None
    except ProblemFileError as exc:
        return 2, f"likq: error: {args.problem}: {exc}", None
    except LikqError as exc:
        return 2, f"likq: error: {exc}", None
    text = render_pretty(tree) if args.pretty else dumps(tree)
    return 0, text + "\n", args.out


def main(argv=None):
    code, text, out = run(argv)
    if code != 0:
        print(text, file=sys.stderr)
        return code
    if out:
        try:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"likq: error: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
