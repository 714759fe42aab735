"""Risk-penalised optimal liquidation of stocks and European options."""

from .closed_form import (PerpetualSolution, TimingClass, classify_trivial,
                          ou_stock_drive_argmax, ou_stock_quadratic_root,
                          perpetual_quadratic_gbm)
from .drive import DriveField, drive, drive_quadratic, drive_shortfall
from .models import (GBM, Call, ExpOU, Exponential, Linear, MarketEnv, Power, Put, QuadVar,
                     Shortfall, Stock, Straddle, drift, loss_deriv, loss_eval, resolve_benchmark)
from .pricing import PriceQuote, delta, price
from .regions import (Boundary, RegionMap, boundedness_check, extract_regions,
                      premium_boundary, zero_contour)
from .simulation import PolicyEstimate, evaluate_policy, realized_penalty_track, simulate_paths
from .vi_solver import (ConvergenceError, Grid, PremiumSurface, SolverOptions,
                        complementarity_report, default_grid, solve_vi)

__version__ = "0.1.0"
