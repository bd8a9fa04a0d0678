"""Deterministic JSON and CSV writers (17 significant digits, LF endings)."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"


def _scalar(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return "null"
        return format(v, ".17g")
    if isinstance(v, str):
        return _string(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _string(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits and keys in insertion order."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_string(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_scalar(v) for v in obj) + "]"
        items = [f"{pad}{dumps(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return _scalar(obj)


def write_json(obj, path: Path) -> None:
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(dumps(obj) + "\n")
    except OSError as err:
        raise OSError(f"cannot write report to {path}: {err.strerror}") from err


def write_grid_csv(path: Path, rows, n: int) -> None:
    """``rows`` yields (x tuple, t, u)."""
    header = ",".join([f"x{i + 1}" for i in range(n)] + ["t", "u"])
    lines = [header]
    for x, t, u in rows:
        lines.append(",".join(format(float(v), ".17g") for v in (*x, t, u)))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
