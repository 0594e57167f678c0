"""Serialization of report trees.

Reports are nested dicts/lists of str, int, float, bool and None.  Floats
are written with 17 significant digits, so ``json.loads(dumps(tree))``
reproduces every value bit for bit.
"""

import dataclasses
import math

import numpy as np


def to_tree(obj):
    """Convert numpy values, tuples and dataclasses into plain report nodes."""
    if isinstance(obj, dict):
        return {str(k): to_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_tree(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_tree(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_tree(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def format_float(x):
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def _quote(s):
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch < " ":
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _write(node, indent, level, parts):
    if node is None:
        parts.append("null")
    elif node is True:
        parts.append("true")
    elif node is False:
        parts.append("false")
    elif isinstance(node, int):
        parts.append(str(node))
    elif isinstance(node, float):
        parts.append(format_float(node))
    elif isinstance(node, str):
        parts.append(_quote(node))
    elif isinstance(node, (list, dict)):
        items = list(node.items()) if isinstance(node, dict) else list(enumerate(node))
        open_, close = ("{", "}") if isinstance(node, dict) else ("[", "]")
        if not items:
            parts.append(open_ + close)
            return
        flat = isinstance(node, list) and all(not isinstance(v, (list, dict)) for v in node)
        parts.append(open_)
        for k, (key, value) in enumerate(items):
            if k:
                parts.append(",")
            if indent is not None and not flat:
                parts.append("\n" + " " * (indent * (level + 1)))
            elif k and indent is not None:
                parts.append(" ")
            if isinstance(node, dict):
                parts.append(_quote(str(key)) + ": ")
            _write(value, indent, level + 1, parts)
        if indent is not None and not flat:
            parts.append("\n" + " " * (indent * level))
        parts.append(close)
    else:
        raise TypeError(f"cannot serialize {type(node).__name__}")


def dumps(tree, indent=2) -> str:
    """JSON text for ``tree`` (already converted with :func:`to_tree`)."""
    parts = []
    _write(tree, indent, 0, parts)
    return "".join(parts)


def render_pretty(tree, width=100) -> str:
    """Plain-text rendering: scalars as ``key: value``, lists of records as tables."""
    lines = []

    def scalar(v):
        if isinstance(v, float):
            return format(v, ".6g")
        if isinstance(v, list):
            return "[" + ", ".join(scalar(u) for u in v) + "]"
        if isinstance(v, dict):
            return "{" + ", ".join(f"{k}={scalar(u)}" for k, u in v.items()) + "}"
        return "-" if v is None else str(v)

    def table(rows, prefix):
        keys = []
        for r in rows:
            keys.extend(k for k in r if k not in keys)
        cells = [[scalar(r.get(k))[:40] for k in keys] for r in rows]
        widths = [max([len(k)] + [len(c[j]) for c in cells]) for j, k in enumerate(keys)]
        lines.append(prefix + "  ".join(k.ljust(w) for k, w in zip(keys, widths)))
        for c in cells:
            lines.append(prefix + "  ".join(v.ljust(w) for v, w in zip(c, widths)))

    def walk(node, prefix):
        for key, value in node.items():
            if isinstance(value, dict):
                lines.append(f"{prefix}{key}:")
                walk(value, prefix + "  ")
            elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
                lines.append(f"{prefix}{key}: ({len(value)})")
                table(value, prefix + "  ")
            else:
                lines.append(f"{prefix}{key}: {scalar(value)}")

    walk(tree, "")
    return "\n".join(line[:width] if len(line) > width else line for line in lines)
