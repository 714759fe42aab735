"""
Selling a call under a shortfall penalty
========================================

Price a call, look at its drive function, solve for the liquidation
premium and check the resulting stopping rule with a simulation.
"""

import numpy as np

from liqtime import (GBM, Call, MarketEnv, Shortfall, evaluate_policy, extract_regions,
                     premium_boundary, price, solve_vi)
from liqtime.drive import DriveField
from liqtime.models import resolve_benchmark
from liqtime.vi_solver import Grid

env = MarketEnv(r=0.03)
model = GBM(mu=0.08, sigma=0.3)
call = Call(K=50.0, T=0.5)

# the benchmark defaults to the initial option price
penalty = resolve_benchmark(Shortfall(alpha=0.1), call, env, model.sigma, s0=50.0)
print(f"benchmark m = C(0, 50) = {penalty.m:.4f}")

# positive drive means waiting pays; the penalty pulls it negative below m
field = DriveField(model, call, penalty, env)
for s in (30.0, 45.0, 50.0, 60.0, 100.0):
    print(f"  G(0, {s:5.1f}) = {float(field(0.0, s)):+.4f}")

grid = Grid.from_prices(5.0, 250.0, 600, call.T, 500)
surface = solve_vi(model, call, penalty, env, grid)
regions = extract_regions(surface)
print("delay intervals at t=0:", [(round(a, 2), round(b, 2)) for a, b in regions.intervals(0)])
for b in premium_boundary(surface, regions):
    print(f"  branch {b.branch_id}: s = {b.s[0]:.2f} at t = 0, {b.s[-1]:.2f} at t = {b.t[-1]:.3f}")

# the premium plus the option value is what an optimal seller expects
v0 = float(price(call, env, model.sigma, 0.0, 50.0).value)
J0 = v0 + float(surface.interp0(50.0))
est = evaluate_policy(surface, model, call, penalty, env, 50.0, n_paths=20_000, seed=1)
print(f"PDE value {J0:.4f}; simulated {est.mean:.4f} +/- {est.stderr:.4f}")
print(f"sell now {est.immediate:.4f}; hold to expiry {est.hold:.4f}")
