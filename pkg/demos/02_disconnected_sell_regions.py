"""
Disconnected sell regions
=========================

A put with a demanding benchmark and a mean-reverting stock both have
sell regions that split into two pieces at a fixed time.
"""

import math

from liqtime import GBM, ExpOU, MarketEnv, Put, Shortfall, Stock, extract_regions, solve_vi
from liqtime.closed_form import ou_stock_drive_argmax
from liqtime.vi_solver import Grid

env = MarketEnv(0.03)

# put, benchmark m = 2K: the drive is negative near s = 0 so selling pays there too
put = Put(50.0, 0.5)
surf = solve_vi(GBM(0.02, 0.3), put, Shortfall(0.001, m=100.0), env,
                Grid.from_prices(1.0, 300.0, 600, 0.5, 500))
rm = extract_regions(surf)
print("put: sell components at t=0:", rm.sell_components(0))
print("     delay interval:", [(round(a, 2), round(b, 2)) for a, b in rm.intervals(0)])

# mean-reverting stock: the drive peaks below the long-run level
ou = ExpOU(beta=4.0, theta=math.log(60.0), sigma=0.3)
peak = ou_stock_drive_argmax(ou.beta, ou.theta, env.r, alpha=1.5, m=50.0)
print(f"OU stock: drive peaks at s = {peak.location:.2f} with G = {peak.value:.2f}")

# very low prices need to be on the grid to see the lower sell piece at t=0
surf = solve_vi(ou, Stock(0.5), Shortfall(1.5, m=50.0), env,
                Grid.from_prices(1e-4, 300.0, 1200, 0.5, 1000))
rm = extract_regions(surf)
print("OU stock: sell components at t=0:", rm.sell_components(0))
print("          delay interval:", [(round(a, 3), round(b, 2)) for a, b in rm.intervals(0)])
