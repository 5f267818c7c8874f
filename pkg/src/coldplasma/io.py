"""Deterministic JSON reports and x,y,value CSV fields."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .grids import Field


def to_plain(obj):
    """Recursively convert numpy scalars/arrays, tuples and reports to JSON types."""
    if hasattr(obj, "to_dict"):
        return to_plain(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _fmt(x, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, float):
        return format(x + 0.0, ".17g") if math.isfinite(x) else "null"
    if isinstance(x, (int, str)):
        return json.dumps(x)
    if isinstance(x, list):
        if not x:
            return "[]"
        items = [_fmt(v, indent, level + 1) for v in x]
        return "[\n" + ",\n".join(pad + s for s in items) + "\n" + end + "]"
    if not x:
        return "{}"
    items = [json.dumps(k) + ": " + _fmt(v, indent, level + 1) for k, v in x.items()]
    return "{\n" + ",\n".join(pad + s for s in items) + "\n" + end + "}"


def dumps(obj, indent=2):
    """JSON text with floats at 17 significant digits; non-finite floats become null."""
    return _fmt(to_plain(obj), indent, 0) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj), encoding="utf-8", newline="\n")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_rows(path, rows, header=("x", "y", "value")):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([format(float(v) + 0.0, ".17g") for v in r])


def write_field(path, fld):
    write_rows(path, fld.rows())


def read_rows(path):
    """(n, 3) array from a CSV with header x,y,value."""
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if [h.strip() for h in header[:3]] != ["x", "y", "value"]:
            raise ValueError(f"{path}: expected header x,y,value, got {header}")
        data = [[float(v) for v in row[:3]] for row in rd if row]
    return np.array(data, dtype=float).reshape(-1, 3)


def field_from_rows(grid, rows, tol=1e-6):
    """Place x,y,value rows on the nodes of ``grid``; rows must sit on nodes."""
    fi = (rows[:, 0] - grid.x0) / grid.h
    fj = (rows[:, 1] - grid.y0) / grid.h
    i = np.rint(fi).astype(np.int64)
    j = np.rint(fj).astype(np.int64)
    bad = (np.abs(fi - i) > tol) | (np.abs(fj - j) > tol) | (i < 0) | (j < 0) \
        | (i >= grid.nx) | (j >= grid.ny)
    if bad.any():
        k = int(np.argmax(bad))
        raise ValueError(f"CSV point {rows[k, :2].tolist()} is not a node of the grid "
                         f"(h={grid.h})")
    vals = np.zeros((grid.nx, grid.ny))
    mask = np.zeros((grid.nx, grid.ny), dtype=bool)
    vals[i, j] = rows[:, 2]
    mask[i, j] = True
    return Field(grid, vals, mask)
