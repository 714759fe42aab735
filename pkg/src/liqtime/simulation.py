"""Monte Carlo paths, realized penalties and stopping-rule evaluation.

Paths are generated in fixed-size blocks.  Block ``b`` draws its normals
from a Philox counter generator keyed by ``(seed, b)``, so path ``i`` is
row ``i % block_size`` of block ``i // block_size`` no matter how many
paths are requested or how many workers run the blocks.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .models import GBM, ExpOU, QuadVar, Shortfall, Stock, resolve_benchmark
from .pricing import price
from .regions import RegionMap, extract_regions
from .vi_solver import PremiumSurface

log = logging.getLogger(__name__)

BLOCK_SIZE = 1024
EXIT_WARN_FRACTION = 0.01


def worker_count(requested=None):
    """Worker threads: ``requested``, capped by LIQTIME_THREADS if set."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("LIQTIME_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, int(n))


def block_normals(seed, block, block_size, n_steps):
    bitgen = np.random.Philox(np.random.SeedSequence([int(seed), int(block)]))
    return np.random.Generator(bitgen).standard_normal((block_size, n_steps))


def log_paths(model, x0, dt, z, sigma=None):
    """Exact log-price paths from standard normal increments ``z``.

    GBM uses the exact log-Euler step; exp-OU uses the Gaussian transition
    of X = ln S toward theta_hat = theta - sigma^2/(2 beta).
    """
    sig = model.sigma if sigma is None else sigma
    n, k = z.shape
    x = np.empty((n, k + 1))
    x[:, 0] = x0
    if isinstance(model, GBM):
        steps = (model.mu - 0.5 * sig * sig) * dt + sig * math.sqrt(dt) * z
        np.cumsum(steps, axis=1, out=x[:, 1:])
        x[:, 1:] += x0
    elif isinstance(model, ExpOU):
        a = math.exp(-model.beta * dt)
        sd = sig * math.sqrt(-math.expm1(-2.0 * model.beta * dt) / (2.0 * model.beta))
        c = model.theta - sig * sig / (2.0 * model.beta)
        for j in range(k):
            x[:, j + 1] = c + (x[:, j] - c) * a + sd * z[:, j]
    else:
        raise TypeError(f"unsupported model {model!r}")
    return x


@dataclass(frozen=True)
class PathRecord:
    """One simulated path.  ``proceeds`` is Y at ``stop`` (discounted)."""

    times: np.ndarray
    prices: np.ndarray
    values: np.ndarray
    penalty: np.ndarray
    stop: int
    proceeds: float


@dataclass(frozen=True)
class PathBatch:
    """A block of paths; row ``j`` is global path ``first + j``."""

    first: int
    times: np.ndarray
    prices: np.ndarray
    values: np.ndarray
    deltas: np.ndarray
    penalty: np.ndarray
    discount: np.ndarray

    def __len__(self):
        return self.prices.shape[0]

    def proceeds(self):
        """Y_u = e^{-ru} V(u, S_u) - penalty to date, on every node."""
        return self.discount * self.values - self.penalty

    def record(self, j, stop=None):
        stop = len(self.times) - 1 if stop is None else int(stop)
        y = self.discount[stop] * self.values[j, stop] - self.penalty[j, stop]
        return PathRecord(self.times, self.prices[j], self.values[j], self.penalty[j], stop, float(y))

    def records(self):
        for j in range(len(self)):
            yield self.record(j)


@dataclass(frozen=True)
class PenaltyTrack:
    """Cumulative discounted penalty, 0 at t=0.

    ``increments`` is the quadratic-mode diagnostic
    alpha * sum e^{-r u_i} (V_{i+1} - V_i)^2, absent for shortfall.
    """

    track: np.ndarray
    increments: np.ndarray | None = None


def realized_penalty_track(times, prices, values, deltas, penalty, env, sigma,
                           literal_ou_stock=False) -> PenaltyTrack:
    """Left-endpoint Riemann sum of e^{-ru} times the penalty rate.

    Arrays are (n_paths, n_steps + 1) or 1-D for a single path.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    one = values.ndim == 1
    if one:
        prices, values, deltas = (np.atleast_2d(a) for a in (prices, values, deltas))
    dt = np.diff(times)
    disc = np.exp(-env.r * times[:-1])
    if isinstance(penalty, Shortfall):
        if penalty.alpha == 0:
            rate = np.zeros_like(values[:, :-1])
        else:
            rate = penalty.alpha * penalty.loss.value(np.maximum(penalty.m - values[:, :-1], 0.0))
        inc_track = None
    elif isinstance(penalty, QuadVar):
        s = np.asarray(prices, dtype=float)[:, :-1]
        if literal_ou_stock:
            rate = penalty.alpha * s * s
        else:
            sds = sigma * s * np.asarray(deltas, dtype=float)[:, :-1]
            rate = penalty.alpha * sds * sds
        dv = np.diff(values, axis=1)
        inc_track = _cumulate(penalty.alpha * disc * dv * dv)
    else:
        raise TypeError(f"unsupported penalty {penalty!r}")
    track = _cumulate(rate * (disc * dt))
    if one:
        track = track[0]
        inc_track = None if inc_track is None else inc_track[0]
    return PenaltyTrack(track, inc_track)


def _cumulate(increments):
    out = np.zeros((increments.shape[0], increments.shape[1] + 1))
    np.cumsum(increments, axis=1, out=out[:, 1:])
    return out


def _is_literal(model, position, penalty):
    return (isinstance(penalty, QuadVar) and penalty.ou_stock_literal
            and isinstance(model, ExpOU) and isinstance(position, Stock))


def _make_batch(model, position, penalty, env, s0, times, z, first, sigma=None):
    dt = times[1] - times[0]
    x = log_paths(model, math.log(s0), dt, z, sigma)
    s = np.exp(x)
    sig = model.sigma if sigma is None else sigma
    q = price(position, env, sig, times[None, :], s)
    values = np.array(q.value, dtype=float)
    values[:, 0] = float(price(position, env, sig, 0.0, s0).value)  # shared start, same as the comparator
    deltas = np.broadcast_to(np.asarray(q.delta, dtype=float), s.shape)
    pen = realized_penalty_track(times, s, values, deltas, penalty, env, sig,
                                 _is_literal(model, position, penalty)).track
    return PathBatch(first, times, s, values, deltas, pen, np.exp(-env.r * times))


def simulate_paths(model, position, penalty, env, s0, n_paths, n_steps, seed,
                   T=None, block_size=BLOCK_SIZE, sigma=None):
    """Yield :class:`PathBatch` blocks covering ``n_paths`` paths over [0, T].

    ``sigma`` overrides the model volatility (0 gives deterministic paths).
    """
    T = position.T if T is None else T
    if not math.isfinite(T):
        raise ValueError("simulation needs a finite horizon")
    sig = model.sigma if sigma is None else sigma
    penalty = resolve_benchmark(penalty, position, env, sig, s0)
    times = np.linspace(0.0, T, n_steps + 1)
    n_blocks = -(-n_paths // block_size)
    for b in range(n_blocks):
        rows = min(block_size, n_paths - b * block_size)
        z = block_normals(seed, b, block_size, n_steps)[:rows]
        yield _make_batch(model, position, penalty, env, s0, times, z, b * block_size, sigma)


# --------------------------------------------------------------------------
# policy evaluation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PolicyEstimate:
    """Monte Carlo estimate of E[Y_tau] for one stopping rule."""

    mean: float
    stderr: float
    n: int
    exits: int
    immediate: float
    hold: float
    hold_stderr: float
    warnings: tuple = ()

    def as_dict(self):
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n, "exits": self.exits,
                "immediate": self.immediate, "hold": self.hold, "hold_stderr": self.hold_stderr,
                "warnings": list(self.warnings)}


def _stop_indices(batch: PathBatch, regions: RegionMap | None, mode):
    n_paths, n_nodes = batch.prices.shape
    last = n_nodes - 1
    if mode == "sell-now":
        return np.zeros(n_paths, dtype=np.int64), np.zeros(n_paths, dtype=bool)
    if mode == "hold":
        return np.full(n_paths, last, dtype=np.int64), np.zeros(n_paths, dtype=bool)
    grid = regions.grid
    x = np.log(batch.prices)
    i = np.rint((x - grid.x_min) / grid.dx).astype(np.int64)
    outside = (x < grid.x_min) | (x > grid.x_max)
    i = np.clip(i, 0, grid.Nx - 1)
    stop_here = ~regions.delay[np.arange(n_nodes)[None, :], i] | outside
    stop_here[:, last] = True
    stop = np.argmax(stop_here, axis=1)
    exited = outside[np.arange(n_paths), stop]
    return stop, exited


def _block_result(args):
    (b, ctx) = args
    model, position, penalty, env, s0, times, seed, block_size, n_paths, regions, mode = ctx
    rows = min(block_size, n_paths - b * block_size)
    z = block_normals(seed, b, block_size, len(times) - 1)[:rows]
    batch = _make_batch(model, position, penalty, env, s0, times, z, b * block_size)
    y = batch.proceeds()
    stop, exited = _stop_indices(batch, regions, mode)
    chosen = y[np.arange(rows), stop]
    return chosen, y[:, -1], int(exited.sum())


def _policy_parts(policy):
    if isinstance(policy, str):
        if policy not in ("hold", "sell-now"):
            raise ValueError(f"unknown policy {policy!r}")
        return None, policy
    if isinstance(policy, PremiumSurface):
        return extract_regions(policy), "map"
    if isinstance(policy, RegionMap):
        return policy, "map"
    raise TypeError(f"unsupported policy {type(policy).__name__}")


def _mean_se(values):
    n = len(values)
    c = float(values[0])  # shift keeps a constant sample exact
    mean = c + math.fsum(values - c) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def evaluate_policy(policy, model, position, penalty, env, s0, n_paths, seed,
                    T=None, n_steps=None, block_size=BLOCK_SIZE, workers=None) -> PolicyEstimate:
    """Estimate E[Y_tau] when selling at the first grid time classified Sell.

    ``policy`` is a solved surface, a region map, ``"hold"`` or
    ``"sell-now"``.  With a map, the simulation uses the map's time grid
    and looks the price up at the nearest log-price node; paths that leave
    the grid are sold on the spot and counted in ``exits``.
    """
    regions, mode = _policy_parts(policy)
    penalty = resolve_benchmark(penalty, position, env, model.sigma, s0)
    if regions is not None:
        times = regions.grid.t
    else:
        T = position.T if T is None else T
        times = np.linspace(0.0, T, (n_steps or 500) + 1)
    immediate = float(price(position, env, model.sigma, 0.0, s0).value)

    n_blocks = -(-n_paths // block_size)
    ctx = (model, position, penalty, env, s0, times, seed, block_size, n_paths, regions, mode)
    jobs = [(b, ctx) for b in range(n_blocks)]
    nw = min(worker_count(workers), n_blocks)
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(_block_result, jobs))
    else:
        parts = [_block_result(j) for j in jobs]

    chosen = np.concatenate([p[0] for p in parts])
    held = np.concatenate([p[1] for p in parts])
    exits = sum(p[2] for p in parts)
    mean, se = _mean_se(chosen)
    hmean, hse = _mean_se(held)
    warns = []
    if exits > EXIT_WARN_FRACTION * n_paths:
        msg = f"{exits} of {n_paths} paths left the grid before selling"
        log.warning(msg)
        warns.append(msg)
    if mode == "sell-now":
        mean, se = immediate, 0.0
    return PolicyEstimate(mean, se, n_paths, exits, immediate, hmean, hse, tuple(warns))


__all__ = [
    "PathRecord", "PathBatch", "PenaltyTrack", "PolicyEstimate", "simulate_paths",
    "realized_penalty_track", "evaluate_policy", "log_paths", "block_normals",
    "worker_count", "BLOCK_SIZE",
]
