"""Sell/delay maps, free-boundary polylines and their topology."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

SELL, DELAY = 0, 1


@dataclass(frozen=True)
class RegionMap:
    """Sell/delay classification of every grid node.

    ``delay[n, i]`` is True when (t_n, s_i) lies in the delay region.  The
    terminal slice is all-sell by construction and is left out of the
    topology statistics.
    """

    grid: object
    delay: np.ndarray
    eps: float
    warnings: tuple = ()

    @property
    def s(self):
        return self.grid.s

    @property
    def t(self):
        return self.grid.t

    def intervals(self, n):
        """Delay intervals [s_lo, s_hi] (node values) of time slice ``n``."""
        d = self.delay[n].astype(np.int8)
        edges = np.flatnonzero(np.diff(np.concatenate(([0], d, [0]))))
        s = self.s
        return [(float(s[a]), float(s[b - 1])) for a, b in zip(edges[::2], edges[1::2])]

    def sell_components(self, n):
        return _runs(~self.delay[n])

    def delay_components(self, n):
        return _runs(self.delay[n])

    def sell_component_counts(self):
        """Connected sell components per slice, terminal slice excluded."""
        return np.array([self.sell_components(n) for n in range(len(self.t) - 1)])

    def classify(self, n, s):
        """Nearest-node lookup in log-price; True means delay."""
        x = self.grid.x
        i = np.rint((np.log(s) - x[0]) / self.grid.dx).astype(np.int64)
        i = np.clip(i, 0, len(x) - 1)
        return self.delay[n, i]


def _runs(mask):
    m = np.asarray(mask, dtype=np.int8)
    if m.size == 0:
        return 0
    return int(m[0] + np.count_nonzero(np.diff(m) == 1))


def extract_regions(surface, eps=None) -> RegionMap:
    """Threshold the premium at ``eps`` (default: the surface's region epsilon).

    Nodes where the drive is strictly positive are always delay nodes: a
    positive drive forces a positive premium, even where the premium is
    too small to separate from rounding.
    """
    eps = surface.eps_region if eps is None else float(eps)
    delay = surface.L > eps
    if surface.drive_sign is not None:
        delay |= surface.drive_sign > 0
    delay[-1] = False
    return RegionMap(grid=surface.grid, delay=delay, eps=eps, warnings=tuple(surface.warnings))


# --------------------------------------------------------------------------
# boundaries
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Boundary:
    """One boundary branch: s as a function of t.

    ``kind`` is +1 where the delay region lies above the branch and -1
    where it lies below.
    """

    branch_id: int
    kind: int
    t: np.ndarray
    s: np.ndarray


def _link(crossings, times, dx_max):
    """Chain per-slice crossings (x, kind) into branches.

    A crossing continues the nearest open branch of the same kind from the
    previous slice when it lies within ``dx_max`` in log-price.
    """
    branches = []
    open_ = []
    for t, row in zip(times, crossings):
        taken = set()
        nxt = []
        for x, kind in row:
            best, best_d = None, dx_max
            for b in open_:
                if b in taken or branches[b][0] != kind:
                    continue
                d = abs(branches[b][2][-1] - x)
                if d <= best_d:
                    best, best_d = b, d
            if best is None:
                branches.append((kind, [], []))
                best = len(branches) - 1
            branches[best][1].append(t)
            branches[best][2].append(x)
            taken.add(best)
            nxt.append(best)
        open_ = nxt
    return [Boundary(i, k, np.asarray(ts), np.exp(np.asarray(xs)))
            for i, (k, ts, xs) in enumerate(branches)]


def premium_boundary(surface, regions: RegionMap | None = None, dx_max=None):
    """Free-boundary branches of a solved surface.

    Each class change between neighbouring nodes gives one crossing,
    placed where L interpolates linearly through the region threshold
    (mid-cell if L does not bracket it).
    """
    regions = regions or extract_regions(surface)
    grid = surface.grid
    x = grid.x
    eps = regions.eps
    rows = []
    for n in range(grid.Nt):
        d = regions.delay[n]
        flips = np.flatnonzero(d[1:] != d[:-1])
        row = []
        for i in flips:
            a, b = surface.L[n, i], surface.L[n, i + 1]
            if (a - eps) * (b - eps) < 0:
                w = (eps - a) / (b - a)
            else:
                w = 0.5
            kind = 1 if d[i + 1] else -1
            row.append((x[i] + w * (x[i + 1] - x[i]), kind))
        rows.append(row)
    dx_max = 10 * grid.dx if dx_max is None else dx_max
    return _link(rows, grid.t[:-1], dx_max)


def zero_contour(field, grid, tol=1e-8, dx_max=None):
    """Zero level set of a drive field, one bisection per sign change."""
    s = grid.s
    rows = []
    for t in grid.t[:-1]:
        g = np.asarray(field(t, s), dtype=float)
        pos = g > 0
        flips = np.flatnonzero(pos[1:] != pos[:-1])
        row = []
        for i in flips:
            lo, hi = s[i], s[i + 1]
            if g[i] == 0:
                root = lo
            else:
                root = brentq(lambda v: float(field(t, v)), lo, hi,
                              xtol=tol, rtol=4 * np.finfo(float).eps)
            kind = 1 if pos[i + 1] else -1
            row.append((np.log(root), kind))
        rows.append(row)
    dx_max = 10 * grid.dx if dx_max is None else dx_max
    return _link(rows, grid.t[:-1], dx_max)


@dataclass(frozen=True)
class Boundedness:
    delay_bounded: bool
    max_delay_s: float
    warnings: tuple = ()


def boundedness_check(regions: RegionMap) -> Boundedness:
    """Delay region counts as bounded when it never reaches the top grid edge."""
    live = regions.delay[:-1]
    touches = bool(np.any(live[:, -1]))
    cols = np.flatnonzero(live.any(axis=0))
    smax = float(regions.s[cols.max()]) if cols.size else float("nan")
    return Boundedness(not touches, smax, regions.warnings)


__all__ = [
    "RegionMap", "extract_regions", "Boundary", "premium_boundary", "zero_contour",
    "Boundedness", "boundedness_check", "SELL", "DELAY",
]
