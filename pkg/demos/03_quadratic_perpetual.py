"""
Quadratic-variation penalty on a perpetual stock
================================================

With a penalty on the realized variance of the position, a stock whose
drift beats the interest rate is sold once its price climbs past s*.
"""

import math

import numpy as np

from liqtime import GBM, MarketEnv, QuadVar, Stock, premium_boundary, solve_vi
from liqtime.closed_form import perpetual_quadratic_gbm
from liqtime.vi_solver import default_grid

for sigma in (0.25, 0.30, 0.35):
    sol = perpetual_quadratic_gbm(mu=0.08, r=0.03, sigma=sigma, alpha=0.1)
    print(f"sigma={sigma:.2f}: s* = {sol.s_star:.3f}, lambda = {sol.lambda_exp:.4f}")

# a 30-year horizon approximates the perpetual problem
env, model = MarketEnv(0.03), GBM(0.08, 0.3)
grid = default_grid(model, Stock(30.0), 5.0, 800, 2000, 30.0)
surf = solve_vi(model, Stock(30.0), QuadVar(0.1), env, grid)
b0 = premium_boundary(surf)[0].s[0]
sol = perpetual_quadratic_gbm(0.08, 0.03, 0.3, 0.1)
print(f"30-year threshold {b0:.3f} vs perpetual {sol.s_star:.3f}")

# the finite-horizon premium stays below the perpetual one
s = np.array([1.0, 3.0, 5.0, 7.0])
for si, fin, per in zip(s, surf.interp0(s), sol.premium(s)):
    print(f"  L(0, {si:.0f}) = {fin:.4f}   perpetual {per:.4f}   ratio {fin / per:.3f}")
