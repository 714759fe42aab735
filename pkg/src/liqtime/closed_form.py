"""Analytic solutions and trivial-timing rules used as solver oracles."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .models import GBM, Call, Linear, Put, Shortfall, Stock, Straddle


class TimingClass(enum.Enum):
    SELL_NOW = "SellNow"
    HOLD_TO_MATURITY = "HoldToMaturity"
    NEVER_SELL = "NeverSell"
    NON_TRIVIAL = "NonTrivial"


@dataclass(frozen=True)
class PerpetualSolution:
    """Perpetual stock premium under GBM with a quadratic-variation penalty.

    ``timing`` is SELL_NOW (premium identically zero, ``s_star == 0``),
    NEVER_SELL (premium infinite, ``s_star == inf``) or NON_TRIVIAL.
    """

    timing: TimingClass
    lambda_exp: float
    B: float
    s_star: float

    def premium(self, s):
        s = np.asarray(s, dtype=float)
        if self.timing is TimingClass.SELL_NOW:
            out = np.zeros_like(s)
        elif self.timing is TimingClass.NEVER_SELL:
            out = np.full_like(s, np.inf)
        else:
            lam, B, ss = self.lambda_exp, self.B, self.s_star
            coef = ss ** (1.0 - lam) / (2.0 - lam)
            inside = coef * s ** lam - s + B * s * s
            out = np.where(s <= ss, inside, 0.0)
        return out[()] if out.ndim == 0 else out

    def premium_deriv(self, s):
        s = np.asarray(s, dtype=float)
        if self.timing is not TimingClass.NON_TRIVIAL:
            out = np.zeros_like(s) if self.timing is TimingClass.SELL_NOW else np.full_like(s, np.nan)
        else:
            lam, B, ss = self.lambda_exp, self.B, self.s_star
            coef = ss ** (1.0 - lam) / (2.0 - lam)
            out = np.where(s <= ss, lam * coef * s ** (lam - 1.0) - 1.0 + 2.0 * B * s, 0.0)
        return out[()] if out.ndim == 0 else out


def perpetual_exponent(mu, r, sigma):
    """Positive root of (sigma^2/2) l (l - 1) + mu l - r = 0."""
    half = 0.5 * sigma * sigma
    return (half - mu + math.sqrt((half - mu) ** 2 + 2.0 * r * sigma * sigma)) / (sigma * sigma)


def perpetual_quadratic_gbm(mu, r, sigma, alpha) -> PerpetualSolution:
    if not sigma > 0 or not r > 0 or not alpha >= 0:
        raise ValueError("need sigma > 0, r > 0, alpha >= 0")
    lam = perpetual_exponent(mu, r, sigma)
    if mu <= r:
        return PerpetualSolution(TimingClass.SELL_NOW, lam, math.nan, 0.0)
    if alpha == 0:
        return PerpetualSolution(TimingClass.NEVER_SELL, lam, 0.0, math.inf)
    B = alpha * sigma ** 2 / (2.0 * mu + sigma ** 2 - r)
    s_star = (1.0 - lam) / ((2.0 - lam) * B)
    return PerpetualSolution(TimingClass.NON_TRIVIAL, lam, B, s_star)


@dataclass(frozen=True)
class DriveMaximum:
    location: float
    value: float
    case: int  # 1: below benchmark, 2: above benchmark, 3: at the kink


def ou_stock_drive_argmax(beta, theta, r, alpha, m, loss=Linear()) -> DriveMaximum:
    """Maximiser of G(s) = (beta(theta - ln s) - r) s - alpha (m - s)^+.

    G is concave with a concave kink at s = m, so the maximiser is the
    stationary point of whichever branch contains it, or the kink itself.
    """
    if not isinstance(loss, Linear):
        raise NotImplementedError("closed-form maximiser is only known for linear loss")
    if not beta > 0 or not alpha >= 0 or not m > 0:
        raise ValueError("need beta > 0, alpha >= 0, m > 0")
    s1 = math.exp(theta - 1.0 - (r - alpha) / beta)
    s2 = math.exp(theta - 1.0 - r / beta)
    if s1 < m:
        return DriveMaximum(s1, beta * s1 - alpha * m, 1)
    if s2 > m:
        return DriveMaximum(s2, beta * s2, 2)
    return DriveMaximum(m, (beta * (theta - math.log(m)) - r) * m, 3)


def ou_stock_quadratic_root(beta, theta, r, alpha, sigma=None) -> float:
    """Root of beta(theta - ln s) - r - c s = 0, with c = alpha (or alpha sigma^2).

    Without ``sigma`` the literal exp-OU stock drive is used; passing
    ``sigma`` gives the root of the sigma^2-weighted drive instead.
    """
    if not beta > 0 or not alpha > 0:
        raise ValueError("need beta > 0 and alpha > 0")
    c = alpha if sigma is None else alpha * sigma * sigma

    def f(s):
        return beta * (theta - math.log(s)) - r - c * s

    hi = math.exp(theta - r / beta)  # f(hi) = -c hi < 0
    lo = hi
    while f(lo) <= 0:
        lo *= 0.5
    return bisect(f, lo, hi, xtol=1e-300, rtol=1e-12, maxiter=500)


def classify_trivial(model, position, penalty, env) -> TimingClass:
    """Sign rules under which the optimal sale time is known in advance."""
    r = env.r
    alpha = penalty.alpha
    if not isinstance(model, GBM):
        return TimingClass.NON_TRIVIAL
    mu = model.mu

    if isinstance(position, Stock) and math.isinf(position.T):
        if mu <= r:
            return TimingClass.SELL_NOW
        if isinstance(penalty, Shortfall) or alpha == 0:
            return TimingClass.NEVER_SELL
        return TimingClass.NON_TRIVIAL

    if isinstance(position, (Stock, Call)):
        # positive delta: drive <= 0 whenever mu <= r
        if mu <= r:
            return TimingClass.SELL_NOW
        if alpha == 0:
            return TimingClass.HOLD_TO_MATURITY
    elif isinstance(position, Put):
        if mu >= r:
            return TimingClass.SELL_NOW
        if alpha == 0:
            return TimingClass.HOLD_TO_MATURITY
    elif isinstance(position, Straddle):
        if mu == r:
            return TimingClass.SELL_NOW
    return TimingClass.NON_TRIVIAL


def hold_to_maturity_stock_premium(mu, r, tau, s):
    """E int_0^tau e^{-ru} (mu - r) S_u du = s (e^{(mu-r) tau} - 1) under GBM."""
    return np.asarray(s, dtype=float) * np.expm1((mu - r) * np.asarray(tau, dtype=float))


__all__ = [
    "TimingClass", "PerpetualSolution", "perpetual_quadratic_gbm", "perpetual_exponent",
    "DriveMaximum", "ou_stock_drive_argmax", "ou_stock_quadratic_root",
    "classify_trivial", "hold_to_maturity_stock_premium",
]
