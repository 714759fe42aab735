"""Drive functions: the running reward whose discounted integral up to the
sale time is the liquidation premium.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import Call, ExpOU, MarketEnv, Put, QuadVar, Shortfall, Stock, drift
from .pricing import price


def _excess_delta_term(model, position, env, t, s):
    q = price(position, env, model.sigma, t, s)
    mu = drift(model, s)
    return (mu - env.r) * s * q.delta, q


def drive_shortfall(model, position, penalty: Shortfall, env: MarketEnv, t, s):
    """(mu(s) - r) s V_s - alpha psi((m - V)^+)."""
    if not isinstance(penalty, Shortfall):
        raise TypeError("drive_shortfall needs a Shortfall penalty")
    gain, q = _excess_delta_term(model, position, env, t, s)
    if penalty.alpha == 0:
        return gain
    if penalty.m is None:
        raise ValueError("shortfall benchmark m is unresolved; see resolve_benchmark")
    shortfall = np.maximum(penalty.m - q.value, 0.0)
    return gain - penalty.alpha * penalty.loss.value(shortfall)


def drive_quadratic(model, position, penalty: QuadVar, env: MarketEnv, t, s):
    """(mu(s) - r) s V_s - alpha sigma^2 s^2 V_s^2."""
    if not isinstance(penalty, QuadVar):
        raise TypeError("drive_quadratic needs a QuadVar penalty")
    if (penalty.ou_stock_literal and isinstance(model, ExpOU)
            and isinstance(position, Stock)):
        s = np.asarray(s, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), s.shape)
        if np.any(t > position.T):
            raise ValueError("t beyond horizon")
        return (drift(model, s) - env.r - penalty.alpha * s) * s
    gain, q = _excess_delta_term(model, position, env, t, s)
    sds = model.sigma * s * q.delta
    return gain - penalty.alpha * sds * sds


def drive(model, position, penalty, env, t, s):
    if isinstance(penalty, Shortfall):
        return drive_shortfall(model, position, penalty, env, t, s)
    if isinstance(penalty, QuadVar):
        return drive_quadratic(model, position, penalty, env, t, s)
    raise TypeError(f"unsupported penalty {penalty!r}")


@dataclass(frozen=True)
class DriveField:
    """Lazily evaluated drive G(t, s) for one problem set-up."""

    model: object
    position: object
    penalty: object
    env: MarketEnv

    def __call__(self, t, s):
        return drive(self.model, self.position, self.penalty, self.env, t, s)

    def on_log_grid(self, t, x):
        return self(t, np.exp(x))

    def sign(self, t, s):
        """Sign of the drive, robust to underflow of the delta.

        Deep out of the money the delta rounds to zero although its sign is
        known.  Where the rounded drive is exactly zero and no shortfall is
        being charged, the sign of (mu(s) - r) * delta is returned instead.
        """
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        out = np.sign(np.asarray(self(t, s), dtype=float))
        flat = out == 0
        if not np.any(flat) or isinstance(self.position, Stock):
            return out
        q = price(self.position, self.env, self.model.sigma, t[flat], s[flat])
        if isinstance(self.position, Call):
            dsign = np.ones_like(q.d1)
        elif isinstance(self.position, Put):
            dsign = -np.ones_like(q.d1)
        else:
            dsign = np.sign(q.d1)
        dsign = np.where(np.isinf(q.d1), np.sign(q.delta), dsign)
        charged = np.zeros(dsign.shape, dtype=bool)
        if isinstance(self.penalty, Shortfall) and self.penalty.alpha > 0:
            charged = q.value < self.penalty.m
        excess = np.sign(drift(self.model, s[flat]) - self.env.r)
        out[flat] = np.where(charged, 0.0, excess * dsign)
        return out
