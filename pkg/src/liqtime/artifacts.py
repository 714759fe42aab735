"""CSV and JSON artifacts.  Floats are written with 17 significant digits."""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .regions import RegionMap
from .vi_solver import Grid, PremiumSurface

FLOAT = "%.17g"


def _ensure_dir(path):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)


def write_columns(path, header, columns, fmt=None):
    """Write equal-length columns as CSV with a one-line header."""
    cols = [np.asarray(c).ravel() for c in columns]
    fmt = fmt or [FLOAT] * len(cols)
    _ensure_dir(path)
    table = np.empty((len(cols[0]), len(cols)), dtype=object)
    for j, c in enumerate(cols):
        table[:, j] = c
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        if len(cols[0]):
            np.savetxt(fh, table, fmt=fmt, delimiter=",")


def write_surface(path, surface: PremiumSurface):
    g = surface.grid
    t, s = np.meshgrid(g.t, g.s, indexing="ij")
    write_columns(path, ("t", "s", "L"), (t, s, surface.L))


def write_residuals(path, surface: PremiumSurface):
    write_columns(path, ("t", "max_residual"), (surface.grid.t, surface.residual))


def write_drive(path, grid: Grid, g):
    t, s = np.meshgrid(grid.t, grid.s, indexing="ij")
    write_columns(path, ("t", "s", "G"), (t, s, g))


def write_regions(path, regions: RegionMap):
    """Region map CSV; class 1 is delay and 0 is sell."""
    t, s = np.meshgrid(regions.t, regions.s, indexing="ij")
    write_columns(path, ("t", "s", "class"), (t, s, regions.delay.astype(np.int64)),
                  fmt=[FLOAT, FLOAT, "%d"])


def write_boundaries(path, branches):
    ids, ts, ss = [], [], []
    for b in branches:
        ids.append(np.full(len(b.t), b.branch_id, dtype=np.int64))
        ts.append(b.t)
        ss.append(b.s)
    cat = (lambda xs, dt: np.concatenate(xs) if xs else np.empty(0, dtype=dt))
    write_columns(path, ("branch_id", "t", "s"),
                  (cat(ids, np.int64), cat(ts, float), cat(ss, float)), fmt=["%d", FLOAT, FLOAT])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    _ensure_dir(path)
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------------
# reading back
# --------------------------------------------------------------------------

def read_header(path):
    with open(path) as fh:
        return fh.readline().strip().split(",")


def _grid_from_columns(t, s):
    tt = np.unique(t)
    ss = np.unique(s)
    if len(t) != len(tt) * len(ss):
        raise ValueError("CSV does not hold a full t x s grid")
    grid = Grid(math.log(ss[0]), math.log(ss[-1]), len(ss), float(tt[-1]), len(tt) - 1)
    return grid, (len(tt), len(ss))


def read_surface(path, drive_sign=None, tol=1e-8) -> PremiumSurface:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    grid, shape = _grid_from_columns(data[:, 0], data[:, 1])
    L = data[:, 2].reshape(shape)
    n = shape[0]
    return PremiumSurface(L=L, grid=grid, residual=np.zeros(n), iterations=np.zeros(n, dtype=np.int64),
                          drive=np.full(shape, np.nan), tol=tol, drive_sign=drive_sign)


def read_regions(path, eps=0.0) -> RegionMap:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    grid, shape = _grid_from_columns(data[:, 0], data[:, 1])
    return RegionMap(grid=grid, delay=data[:, 2].reshape(shape) > 0.5, eps=eps)


__all__ = [
    "write_columns", "write_surface", "write_residuals", "write_drive", "write_regions",
    "write_boundaries", "write_json", "read_header", "read_surface", "read_regions",
]
