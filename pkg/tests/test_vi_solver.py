import math

import numpy as np
import pytest

from liqtime.drive import DriveField
from liqtime.models import GBM, Call, ExpOU, MarketEnv, Put, QuadVar, Shortfall, Stock
from liqtime.vi_solver import (ConvergenceError, Grid, SolverOptions, complementarity_report,
                               default_grid, solve_vi)

ENV = MarketEnv(0.03)
LN60 = math.log(60.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(1.0, 0.0, 10, 1.0, 10)
    with pytest.raises(ValueError):
        Grid(0.0, 1.0, 2, 1.0, 10)
    with pytest.raises(ValueError):
        Grid(0.0, 1.0, 10, 1.0, 0)
    with pytest.raises(ValueError):
        Grid(0.0, 1.0, 10, math.inf, 10)
    g = Grid.from_prices(1.0, math.e, 11, 2.0, 4)
    assert g.dx == pytest.approx(0.1) and g.dt == 0.5 and g.s[-1] == pytest.approx(math.e)


def test_default_grid_centring():
    g = default_grid(GBM(0.08, 0.3), Stock(1.0), s0=10.0)
    assert 0.5 * (g.x_min + g.x_max) == pytest.approx(math.log(10.0))
    assert g.x_max - math.log(10.0) == pytest.approx(0.035 + 5 * 0.3)
    ou = ExpOU(4.0, LN60, 0.3)
    g = default_grid(ou, Stock(0.5), s0=20.0)
    assert g.x_min < math.log(20.0) < ou.theta_hat < g.x_max


def test_horizon_checks():
    g = Grid.from_prices(10, 100, 50, 0.4, 10)
    with pytest.raises(ValueError):
        solve_vi(GBM(0.08, 0.3), Call(50.0, 0.5), Shortfall(0.1), ENV, g)
    with pytest.raises(ValueError):
        solve_vi(GBM(0.08, 0.3), Stock(0.3), Shortfall(0.0), ENV, g)


def test_sell_now_gives_zero_premium():
    g = default_grid(GBM(0.02, 0.3), Stock(0.5), s0=10.0, Nx=200, Nt=100)
    s = solve_vi(GBM(0.02, 0.3), Stock(0.5), Shortfall(0.0), ENV, g)
    assert np.all(s.L == 0.0)
    rep = complementarity_report(s, GBM(0.02, 0.3), ENV)
    assert rep.worst <= s.eps_num and rep.ok


def test_hold_to_maturity_stock_small_grid():
    model, pos = GBM(0.08, 0.3), Stock(0.5)
    g = default_grid(model, pos, s0=10.0, Nx=400, Nt=200)
    s = solve_vi(model, pos, Shortfall(0.0), ENV, g)
    exact = g.s * math.expm1(0.05 * 0.5)
    assert s.interp0(10.0) == pytest.approx(0.2532, abs=1e-4)
    np.testing.assert_allclose(s.L[0, 40:-40], exact[40:-40], rtol=2e-3)


@pytest.fixture(scope="module")
def call_sf():
    model, pos = GBM(0.08, 0.3), Call(50.0, 0.5)
    g = Grid.from_prices(5.0, 250.0, 300, 0.5, 200)
    out = {a: solve_vi(model, pos, Shortfall(a), ENV, g) for a in (0.0, 0.01, 0.1, 1.0)}
    return model, g, out


def test_obstacle_and_terminal_condition(call_sf):
    _, _, out = call_sf
    for s in out.values():
        assert np.all(s.L >= -s.eps_num)
        assert np.all(s.L[-1] == 0.0)


def test_complementarity_within_tolerance(call_sf):
    model, _, out = call_sf
    for s in out.values():
        rep = complementarity_report(s, model, ENV)
        assert rep.ok, rep.worst
        assert rep.worst <= 1e-8 * s.scale
        assert len(rep.failures()) == 0


def test_positive_drive_implies_positive_premium(call_sf):
    _, _, out = call_sf
    for s in out.values():
        # interior nodes only: edge values come from the boundary extrapolation
        pos_g = s.drive[:-1, 1:-1] > 0
        pos_l = s.L[:-1, 1:-1] > 0
        # one-cell slack in s
        slack = pos_l.copy()
        slack[:, 1:] |= pos_l[:, :-1]
        slack[:, :-1] |= pos_l[:, 1:]
        assert np.all(slack[pos_g])


def test_alpha_monotone(call_sf):
    _, _, out = call_sf
    alphas = sorted(out)
    for a1, a2 in zip(alphas, alphas[1:]):
        assert np.all(out[a1].L >= out[a2].L - out[a1].eps_num)


def test_drive_dominance_with_hand_built_fields():
    model = GBM(0.05, 0.25)
    g = Grid.from_prices(5.0, 200.0, 200, 1.0, 100)
    g_b = lambda t, s: 0.02 * s * (1 - t) - 0.5 * np.abs(np.log(s / 40.0))
    g_a = lambda t, s: g_b(t, s) + 0.1 * np.exp(-((np.log(s / 60.0)) ** 2))
    la = solve_vi(model, Stock(1.0), None, ENV, g, drive=g_a)
    lb = solve_vi(model, Stock(1.0), None, ENV, g, drive=g_b)
    assert np.all(la.L >= lb.L - la.eps_num)
    assert la.L.max() > lb.L.max()


def _refine(model, pos, pen, lo, hi, levels=((101, 50), (201, 100), (401, 200))):
    Ls = []
    for Nx, Nt in levels:
        g = Grid.from_prices(lo, hi, Nx, pos.T, Nt)
        Ls.append(solve_vi(model, pos, pen, ENV, g).L[0][:: (Nx - 1) // (levels[0][0] - 1)])
    return Ls


def test_second_order_refinement_smooth_problem():
    L1, L2, L3 = _refine(GBM(0.08, 0.3), Call(50.0, 0.5), Shortfall(0.0), 5.0, 250.0)
    d1, d2 = np.abs(L2 - L1), np.abs(L3 - L2)
    mid = slice(10, -10)
    ratio = d1[mid] / d2[mid]
    assert np.median(ratio) == pytest.approx(4.0, abs=0.3)
    assert np.all(d2[mid] < d1[mid] / 3.0)


def test_refinement_away_from_free_boundary():
    L1, L2, L3 = _refine(GBM(0.08, 0.3), Call(50.0, 0.5), Shortfall(0.1), 5.0, 250.0)
    delay = (L1 > 1e-6) & (L2 > 1e-6) & (L3 > 1e-6)
    smooth = delay.copy()
    for k in range(1, 6):
        smooth[k:] &= delay[:-k]
        smooth[:-k] &= delay[k:]
    smooth[-10:] = False
    d1, d2 = np.abs(L2 - L1)[smooth], np.abs(L3 - L2)[smooth]
    assert smooth.sum() > 20
    assert np.median(d1 / d2) > 3.5


@pytest.mark.parametrize("model,pos,pen,lo,hi", [
    (GBM(0.02, 0.3), Put(50.0, 0.5), Shortfall(0.001, m=100.0), 1.0, 300.0),
    (ExpOU(4.0, LN60, 0.3), Call(50.0, 0.5), Shortfall(0.2), 5.0, 300.0),
])
def test_delay_region_strictly_inside_grid(model, pos, pen, lo, hi):
    s = solve_vi(model, pos, pen, ENV, Grid.from_prices(lo, hi, 400, 0.5, 200))
    inside = np.flatnonzero(s.L[0] > s.eps_region)
    assert inside.size > 0
    assert inside.max() < s.grid.Nx - 1
    assert "delay region reaches the upper grid edge" not in s.warnings


def test_truncated_psor_is_reported():
    model, pos = GBM(0.08, 0.3), Call(50.0, 0.5)
    g = Grid.from_prices(5.0, 250.0, 200, 0.5, 50)
    with pytest.raises(ConvergenceError) as err:
        solve_vi(model, pos, Shortfall(0.1), ENV, g, SolverOptions(max_iter=1))
    assert err.value.worst_residual > 1e-8
    s = solve_vi(model, pos, Shortfall(0.1), ENV, g, SolverOptions(max_iter=1, raise_on_failure=False))
    rep = complementarity_report(s, model, ENV)
    assert not rep.ok and len(rep.failures()) > 0


def test_quadratic_stock_long_horizon_threshold():
    from liqtime.closed_form import perpetual_quadratic_gbm

    model = GBM(0.08, 0.3)
    from liqtime.regions import premium_boundary

    model = GBM(0.08, 0.3)
    g = Grid.from_prices(0.05, 200.0, 600, 30.0, 800)
    s = solve_vi(model, Stock(30.0), QuadVar(0.1), ENV, g)
    top = [b for b in premium_boundary(s) if b.t[0] == 0.0 and b.kind == -1]
    assert len(top) == 1
    assert top[0].s[0] == pytest.approx(perpetual_quadratic_gbm(0.08, 0.03, 0.3, 0.1).s_star, rel=0.03)


def test_custom_drive_field_object():
    model, pos = GBM(0.08, 0.3), Stock(0.5)
    f = DriveField(model, pos, Shortfall(0.0), ENV)
    g = Grid.from_prices(5.0, 20.0, 60, 0.5, 20)
    a = solve_vi(model, pos, Shortfall(0.0), ENV, g)
    b = solve_vi(model, pos, None, ENV, g, drive=f)
    np.testing.assert_array_equal(a.L, b.L)
