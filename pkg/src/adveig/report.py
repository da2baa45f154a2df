"""Deterministic JSON and CSV serialisation.

Keys are sorted, floats are written with 17 significant digits, non-finite
floats become ``null`` and every file ends with a newline, so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import dataclasses
import io
import math
import os
from typing import Iterable, Sequence

import numpy as np

__all__ = ["to_plain", "dumps", "write_json", "csv_text", "write_csv", "write_report"]


def to_plain(obj):
    """Convert reports, dataclasses and numpy values to JSON-ready builtins."""
    if hasattr(obj, "as_dict"):
        return to_plain(obj.as_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _scalar(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g") if math.isfinite(v) else "null"
    if isinstance(v, str):
        return _quote(v)
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _quote(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _emit(v, indent: int, buf: io.StringIO) -> None:
    pad = "  " * (indent + 1)
    if isinstance(v, dict):
        if not v:
            buf.write("{}")
            return
        buf.write("{\n")
        keys = sorted(v)
        for i, k in enumerate(keys):
            buf.write(f"{pad}{_quote(k)}: ")
            _emit(v[k], indent + 1, buf)
            buf.write(",\n" if i < len(keys) - 1 else "\n")
        buf.write("  " * indent + "}")
    elif isinstance(v, list):
        if not v:
            buf.write("[]")
            return
        if all(not isinstance(x, (dict, list)) for x in v):
            buf.write("[" + ", ".join(_scalar(x) for x in v) + "]")
            return
        buf.write("[\n")
        for i, x in enumerate(v):
            buf.write(pad)
            _emit(x, indent + 1, buf)
            buf.write(",\n" if i < len(v) - 1 else "\n")
        buf.write("  " * indent + "]")
    else:
        buf.write(_scalar(v))


def dumps(obj) -> str:
    buf = io.StringIO()
    _emit(to_plain(obj), 0, buf)
    buf.write("\n")
    return buf.getvalue()


def _write_text(path, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_json(obj, path) -> str:
    text = dumps(obj)
    _write_text(path, text)
    return text


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    text = csv_text(header, rows)
    _write_text(path, text)
    return text


SWEEP_COLUMNS = ("A", "lambda", "dlam_formula", "dlam_fd", "residual", "positivity_ok", "iterations", "peclet")


def write_report(report, fmt: str, path) -> str:
    """Write a report as ``json`` or, for sweeps, one CSV row per amplitude."""
    if fmt == "json":
        return write_json(report, path)
    if fmt == "csv":
        rows = getattr(report, "rows", None)
        if rows is None:
            raise ValueError("only reports with rows can be written as CSV")
        data = [[r.as_dict()[c] for c in SWEEP_COLUMNS] for r in rows]
        return write_csv(path, SWEEP_COLUMNS, data)
    raise ValueError(f"unknown report format {fmt!r}")
