"""Black-Scholes prices and deltas under the risk-neutral GBM with drift r.

The pricing measure is the same for both physical models, so nothing here
depends on the drift of the stock.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .models import Call, MarketEnv, Put, Stock, Straddle

_SQRT2 = np.sqrt(2.0)


def norm_cdf(x):
    """Standard normal CDF via erfc; accurate in both tails."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class PriceQuote:
    value: np.ndarray
    delta: np.ndarray
    d1: np.ndarray
    d2: np.ndarray


def _d1_d2(K, r, sigma, tau, s):
    # tau > 0 entries only
    vol = sigma * np.sqrt(tau)
    d1 = (np.log(s / K) + (r + 0.5 * sigma * sigma) * tau) / vol
    return d1, d1 - vol


def _squeeze(a):
    return a[()] if a.ndim == 0 else a


def price(position, env: MarketEnv, sigma: float, t, s) -> PriceQuote:
    """Value, delta and d1/d2 of ``position`` at time ``t`` and spot ``s``.

    ``t`` and ``s`` broadcast against each other.  At ``t == T`` the payoff
    is returned together with the left-limit delta at the kink.
    """
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    if np.any(s <= 0):
        raise ValueError("price must be positive")
    T = position.T
    if np.any(t > T) or np.any(t < 0):
        raise ValueError(f"t must lie in [0, {T}]")

    if isinstance(position, Stock):
        nan = np.full(s.shape, np.nan)
        return PriceQuote(_squeeze(s.astype(float)), _squeeze(np.ones(s.shape)),
                          _squeeze(nan), _squeeze(nan.copy()))

    K, r = position.K, env.r
    tau = T - t
    live = tau > 0
    # at expiry d1 = d2 = +inf above the strike and -inf at or below it
    d1 = np.where(s > K, np.inf, -np.inf)
    d2 = d1.copy()
    if np.any(live):
        a, b = _d1_d2(K, r, sigma, tau[live], s[live])
        d1[live] = a
        d2[live] = b
    disc = np.exp(-r * tau)

    if isinstance(position, Call):
        nd1 = norm_cdf(d1)
        value = np.where(live, s * nd1 - K * disc * norm_cdf(d2), np.maximum(s - K, 0.0))
        delta = nd1
    elif isinstance(position, Put):
        value = np.where(live, K * disc * norm_cdf(-d2) - s * norm_cdf(-d1),
                         np.maximum(K - s, 0.0))
        delta = -norm_cdf(-d1)
    elif isinstance(position, Straddle):
        call = s * norm_cdf(d1) - K * disc * norm_cdf(d2)
        put = K * disc * norm_cdf(-d2) - s * norm_cdf(-d1)
        value = np.where(live, call + put, np.abs(s - K))
        delta = norm_cdf(d1) - norm_cdf(-d1)
    else:
        raise TypeError(f"unsupported position {position!r}")

    return PriceQuote(_squeeze(np.asarray(value, dtype=float)), _squeeze(delta),
                      _squeeze(d1), _squeeze(d2))


def delta(position, env: MarketEnv, sigma: float, t, s):
    return price(position, env, sigma, t, s).delta


def value(position, env: MarketEnv, sigma: float, t, s):
    return price(position, env, sigma, t, s).value
