"""
Realized penalties along one price path
=======================================

The shortfall penalty only accrues while the option is worth less than
the benchmark; the quadratic-variation penalty accrues all the time.
"""

import numpy as np

from liqtime import GBM, Call, MarketEnv, QuadVar, Shortfall, simulate_paths

env = MarketEnv(0.03)
model = GBM(-0.05, 0.3)
call = Call(100.0, 1.0)

(sf,) = simulate_paths(model, call, Shortfall(1.0), env, 100.0, 1, 500, seed=1)
(qv,) = simulate_paths(model, call, QuadVar(0.05), env, 100.0, 1, 500, seed=1)
assert np.array_equal(sf.prices, qv.prices)  # same seed, same path

flat = np.diff(sf.penalty[0]) == 0
print(f"shortfall penalty flat on {flat.mean():.0%} of steps, total {sf.penalty[0, -1]:.4f}")
print(f"quadratic penalty total {qv.penalty[0, -1]:.4f}")

print("   t      S       C    shortfall  quadratic")
for j in range(0, 501, 50):
    print(f"{sf.times[j]:.2f} {sf.prices[0, j]:7.2f} {sf.values[0, j]:7.3f} "
          f"{sf.penalty[0, j]:9.4f} {qv.penalty[0, j]:9.4f}")
