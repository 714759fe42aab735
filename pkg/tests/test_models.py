import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liqtime.models import (GBM, Call, ExpOU, Exponential, Linear, MarketEnv, Power, Put,
                            QuadVar, Shortfall, Stock, Straddle, drift, log_drift, loss_deriv,
                            loss_eval, resolve_benchmark)

# Finite difference of E[ln S_h] under the exact OU transition, plus sigma^2/2
# (tests/oracles.py: ou_log_mean, h=1e-6, beta=4, theta=ln 60, sigma=0.3, s=30).
OU_DRIFT_FD_AT_30 = 2.7725832672479793

LOSSES = [Linear(), Power(1.0), Power(1.5), Power(2.0), Power(3.0), Exponential(0.5), Exponential(1.0)]


def test_gbm_drift_is_constant():
    assert drift(GBM(0.08, 0.3), 50.0) == 0.08
    np.testing.assert_array_equal(drift(GBM(0.08, 0.3), np.array([1.0, 10.0, 1e4])), 0.08)


def test_ou_drift_vanishes_at_long_run_level():
    assert drift(ExpOU(4.0, math.log(60.0), 0.3), 60.0) == pytest.approx(0.0, abs=1e-14)


def test_ou_drift_matches_transition_oracle():
    from oracles import ou_log_mean

    x = math.log(30.0)
    fd = (ou_log_mean(x, 4.0, math.log(60.0), 0.3, 1e-6) - x) / 1e-6 + 0.045
    assert fd == pytest.approx(OU_DRIFT_FD_AT_30, rel=1e-12)
    got = drift(ExpOU(4.0, math.log(60.0), 0.3), 30.0)
    assert got == pytest.approx(4.0 * math.log(2.0), rel=1e-14)
    assert got == pytest.approx(OU_DRIFT_FD_AT_30, rel=1e-5)


def test_log_drift_subtracts_half_variance():
    m = ExpOU(4.0, math.log(60.0), 0.3)
    assert log_drift(m, math.log(30.0)) == pytest.approx(drift(m, 30.0) - 0.045)
    assert log_drift(GBM(0.08, 0.3), 1.0) == pytest.approx(0.035)


@pytest.mark.parametrize("s", [0.0, -1.0])
def test_drift_rejects_non_positive_price(s):
    with pytest.raises(ValueError):
        drift(GBM(0.08, 0.3), s)


@given(st.floats(0.01, 1e4), st.floats(0.01, 1e4))
def test_ou_drift_strictly_decreasing(a, b):
    if a == b:
        return
    lo, hi = sorted((a, b))
    m = ExpOU(4.0, math.log(60.0), 0.3)
    assert drift(m, lo) > drift(m, hi)


def test_loss_examples():
    assert loss_eval(Linear(), 3.2) == 3.2
    assert loss_eval(Power(2.0), 0.0) == 0.0
    assert loss_eval(Exponential(1.0), 1.0) == pytest.approx(math.e - 1.0, rel=1e-15)


@pytest.mark.parametrize("psi", LOSSES)
def test_loss_rejects_negative_shortfall(psi):
    with pytest.raises(ValueError):
        loss_eval(psi, -0.1)
    with pytest.raises(ValueError):
        loss_deriv(psi, -0.1)


@pytest.mark.parametrize("psi", LOSSES)
def test_loss_zero_at_zero(psi):
    assert loss_eval(psi, 0.0) == 0.0


@pytest.mark.parametrize("psi", LOSSES)
@given(a=st.floats(0.0, 30.0), b=st.floats(0.0, 30.0))
def test_loss_monotone_and_midpoint_convex(psi, a, b):
    lo, hi = sorted((a, b))
    f_lo, f_hi = loss_eval(psi, lo), loss_eval(psi, hi)
    tol = 1e-12 * max(1.0, abs(f_hi))
    assert f_lo <= f_hi + tol
    assert loss_eval(psi, 0.5 * (lo + hi)) <= 0.5 * (f_lo + f_hi) + tol


@pytest.mark.parametrize("psi", LOSSES)
@pytest.mark.parametrize("ell", [0.1, 1.0, 10.0])
def test_loss_derivative_matches_finite_difference(psi, ell):
    h = 1e-6 * ell
    fd = (loss_eval(psi, ell + h) - loss_eval(psi, ell - h)) / (2 * h)
    assert loss_deriv(psi, ell) == pytest.approx(fd, rel=1e-6)


def test_right_derivative_at_zero():
    assert loss_deriv(Linear(), 0.0) == 1.0
    assert loss_deriv(Power(2.0), 0.0) == 0.0
    assert loss_deriv(Exponential(2.0), 0.0) == 2.0


@pytest.mark.parametrize("bad", [
    lambda: MarketEnv(0.0), lambda: GBM(0.1, 0.0), lambda: ExpOU(0.0, 1.0, 0.3),
    lambda: Power(0.5), lambda: Exponential(0.0), lambda: Shortfall(-0.1),
    lambda: Shortfall(0.1, m=0.0), lambda: QuadVar(-1.0), lambda: Call(0.0, 1.0),
    lambda: Put(50.0, 0.0), lambda: Straddle(50.0, math.inf), lambda: Stock(0.0),
])
def test_invariants_rejected(bad):
    with pytest.raises(ValueError):
        bad()


def test_benchmark_defaults_to_initial_value():
    env = MarketEnv(0.03)
    pen = resolve_benchmark(Shortfall(0.1), Call(50.0, 0.5), env, 0.3)
    from oracles import lognormal_call_quadrature

    assert pen.m == pytest.approx(lognormal_call_quadrature(50, 50, 0.03, 0.3, 0.5), rel=1e-10)
    assert resolve_benchmark(Shortfall(0.1), Stock(1.0), env, 0.3, s0=42.0).m == 42.0
    with pytest.raises(ValueError):
        resolve_benchmark(Shortfall(0.1), Stock(1.0), env, 0.3)
    explicit = Shortfall(0.1, m=7.0)
    assert resolve_benchmark(explicit, Call(50.0, 0.5), env, 0.3) is explicit
