"""Price dynamics, loss functions, penalties and positions.

Everything here is a frozen dataclass, so instances can be shared freely
between threads and used as dictionary keys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


def _check_positive(name, value):
    if not (value > 0):
        raise ValueError(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class MarketEnv:
    r: float

    def __post_init__(self):
        _check_positive("r", self.r)


# --------------------------------------------------------------------------
# Price dynamics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GBM:
    """dS = mu S dt + sigma S dW."""

    mu: float
    sigma: float

    def __post_init__(self):
        _check_positive("sigma", self.sigma)


@dataclass(frozen=True)
class ExpOU:
    """Exponential OU: dS = beta (theta - ln S) S dt + sigma S dW."""

    beta: float
    theta: float
    sigma: float

    def __post_init__(self):
        _check_positive("sigma", self.sigma)
        _check_positive("beta", self.beta)

    @property
    def theta_hat(self) -> float:
        """Mean level of X = ln S under the physical measure."""
        return self.theta - self.sigma ** 2 / (2.0 * self.beta)


ModelParams = Union[GBM, ExpOU]


def drift(model: ModelParams, s):
    """Per-year drift rate mu(s) of the stock price."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("price must be positive")
    if isinstance(model, GBM):
        out = np.full_like(s, model.mu)
    elif isinstance(model, ExpOU):
        out = model.beta * (model.theta - np.log(s))
    else:
        raise TypeError(f"unsupported model {model!r}")
    return out[()] if out.ndim == 0 else out


def log_drift(model: ModelParams, x):
    """Drift of X = ln S, i.e. mu(e^x) - sigma^2/2."""
    x = np.asarray(x, dtype=float)
    if isinstance(model, GBM):
        return np.full_like(x, model.mu - 0.5 * model.sigma ** 2)
    return model.beta * (model.theta - x) - 0.5 * model.sigma ** 2


# --------------------------------------------------------------------------
# Loss functions
# --------------------------------------------------------------------------

def _check_ell(ell):
    ell = np.asarray(ell, dtype=float)
    if np.any(ell < 0):
        raise ValueError("shortfall must be non-negative")
    return ell


@dataclass(frozen=True)
class Linear:
    def value(self, ell):
        return _check_ell(ell) * 1.0

    def deriv(self, ell):
        return np.ones_like(_check_ell(ell))


@dataclass(frozen=True)
class Power:
    p: float

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"power loss needs p >= 1, got {self.p!r}")

    def value(self, ell):
        return _check_ell(ell) ** self.p

    def deriv(self, ell):
        ell = _check_ell(ell)
        if self.p == 1:
            return np.ones_like(ell)
        return self.p * ell ** (self.p - 1)


@dataclass(frozen=True)
class Exponential:
    gamma: float

    def __post_init__(self):
        _check_positive("gamma", self.gamma)

    def value(self, ell):
        return np.expm1(self.gamma * _check_ell(ell))

    def deriv(self, ell):
        return self.gamma * np.exp(self.gamma * _check_ell(ell))


LossFunction = Union[Linear, Power, Exponential]


def loss_eval(psi: LossFunction, ell):
    out = psi.value(ell)
    return out[()] if np.ndim(out) == 0 else out


def loss_deriv(psi: LossFunction, ell):
    """Right-derivative of the loss; at ell=0 this is the one-sided limit."""
    out = psi.deriv(ell)
    return out[()] if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# Penalties
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Shortfall:
    """alpha * psi((m - V)^+) per unit time.

    ``m=None`` means "use the initial position value" and must be resolved
    with :func:`resolve_benchmark` before evaluating a drive.
    """

    alpha: float
    m: float | None = None
    loss: LossFunction = Linear()

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha!r}")
        if self.m is not None:
            _check_positive("m", self.m)


@dataclass(frozen=True)
class QuadVar:
    """alpha * d[V,V] penalty.

    ``ou_stock_literal`` switches the exp-OU stock drive to the form
    [beta(theta - ln s) - r - alpha s] s, which drops the sigma^2 factor.
    """

    alpha: float
    ou_stock_literal: bool = False

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha!r}")


PenaltySpec = Union[Shortfall, QuadVar]


# --------------------------------------------------------------------------
# Positions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Stock:
    """A share of stock held up to horizon T (may be ``math.inf``)."""

    T: float

    def __post_init__(self):
        _check_positive("T", self.T)

    @property
    def K(self):
        return None


@dataclass(frozen=True)
class _Option:
    K: float
    T: float

    def __post_init__(self):
        _check_positive("K", self.K)
        _check_positive("T", self.T)
        if math.isinf(self.T):
            raise ValueError("options need a finite maturity")


@dataclass(frozen=True)
class Call(_Option):
    pass


@dataclass(frozen=True)
class Put(_Option):
    pass


@dataclass(frozen=True)
class Straddle(_Option):
    """Long call plus long put, same strike."""


PositionSpec = Union[Stock, Call, Put, Straddle]


def default_spot(position: PositionSpec) -> float | None:
    """Reference spot used for benchmarks when none is given: the strike."""
    return position.K


def resolve_benchmark(penalty: PenaltySpec, position: PositionSpec,
                      env: MarketEnv, sigma: float, s0: float | None = None) -> PenaltySpec:
    """Fill in ``m = V(0, s0)`` when the shortfall benchmark is unset."""
    if not isinstance(penalty, Shortfall) or penalty.m is not None:
        return penalty
    if penalty.alpha == 0 and s0 is None and position.K is None:
        return penalty  # benchmark never enters the drive
    from .pricing import price

    if s0 is None:
        s0 = default_spot(position)
    if s0 is None:
        raise ValueError("stock benchmark needs s0 or an explicit m")
    m = float(price(position, env, sigma, 0.0, s0).value)
    return Shortfall(alpha=penalty.alpha, m=m, loss=penalty.loss)
