"""Projected theta-scheme for the liquidation-premium variational inequality.

The premium u(t, x) = L(t, e^x) solves, backward from u(T, .) = 0,

    min{ -u_t - eta(x) u_x - (sigma^2 / 2) u_xx + r u - g(t, x),  u } = 0,

with g the drive function.  Each time step is a tridiagonal linear
complementarity problem handled by projected SOR.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .drive import DriveField
from .models import GBM, MarketEnv, Stock, log_drift, resolve_benchmark

log = logging.getLogger(__name__)

REGION_EPS = 1e-6
NUM_EPS = 1e-10


class ConvergenceError(RuntimeError):
    """PSOR did not reach the requested tolerance."""

    def __init__(self, message, step, worst_residual):
        super().__init__(message)
        self.step = step
        self.worst_residual = worst_residual


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    Nx: int
    T: float
    Nt: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be < x_max")
        if self.Nx < 3:
            raise ValueError("Nx must be >= 3")
        if self.Nt < 1:
            raise ValueError("Nt must be >= 1")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError("grid horizon must be positive and finite")

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.Nx)

    @property
    def s(self):
        return np.exp(self.x)

    @property
    def t(self):
        return np.linspace(0.0, self.T, self.Nt + 1)

    @property
    def dx(self):
        return (self.x_max - self.x_min) / (self.Nx - 1)

    @property
    def dt(self):
        return self.T / self.Nt

    @classmethod
    def from_prices(cls, s_min, s_max, Nx, T, Nt):
        return cls(math.log(s_min), math.log(s_max), Nx, T, Nt)


def default_grid(model, position, s0=None, Nx=400, Nt=400, T=None) -> Grid:
    """Log-price grid wide enough that edge effects stay far from s0.

    GBM grids are centred at ln s0; exp-OU grids cover both ln s0 and the
    mean log level theta - sigma^2/(2 beta).
    """
    T = position.T if T is None else T
    if s0 is None:
        s0 = position.K
    if s0 is None:
        raise ValueError("need s0 for a stock position")
    sig = model.sigma
    spread = 5.0 * sig * math.sqrt(T)
    x0 = math.log(s0)
    if isinstance(model, GBM):
        eta = model.mu - 0.5 * sig * sig
        half = max(spread, abs(eta) * T + spread)
        lo, hi = x0 - half, x0 + half
    else:
        c = model.theta_hat
        half = spread
        lo, hi = min(c, x0) - half, max(c, x0) + half
    return Grid(lo, hi, Nx, T, Nt)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    omega: float = 1.2
    max_iter: int = 10_000
    theta: float = 0.5
    implicit_steps: int = 2
    raise_on_failure: bool = True

    def __post_init__(self):
        if not 0 < self.omega < 2:
            raise ValueError("omega must lie in (0, 2)")
        if not 0.5 <= self.theta <= 1:
            raise ValueError("theta must lie in [0.5, 1]")


@dataclass(frozen=True)
class PremiumSurface:
    """Premium on the grid; ``L[n, i]`` is L at (t_n, s_i), t ascending."""

    L: np.ndarray
    grid: Grid
    residual: np.ndarray
    iterations: np.ndarray
    drive: np.ndarray
    tol: float
    drive_sign: np.ndarray | None = None
    warnings: tuple = ()
    notice: str | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def scale(self):
        return max(1.0, float(np.max(np.abs(self.L))))

    @property
    def eps_region(self):
        return REGION_EPS * self.scale

    @property
    def eps_num(self):
        return NUM_EPS * self.scale

    def at(self, t_index=0):
        return self.L[t_index]

    def interp0(self, s):
        """Linear interpolation of L(0, .) in log-price."""
        return np.interp(np.log(s), self.grid.x, self.L[0])


# --------------------------------------------------------------------------
# discretisation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Operator:
    """Tridiagonal log-price generator on the interior nodes 1..Nx-2.

    The edge rows already include the linear-in-price extrapolation
    L_ss = 0 (u_xx = u_x) of the ghost values u_0 and u_{Nx-1}.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    left: tuple   # u_0 = a u_1 + b u_2
    right: tuple  # u_{N-1} = a u_{N-2} + b u_{N-3}

    def apply(self, u):
        out = self.diag * u
        out[1:] += self.lower[1:] * u[:-1]
        out[:-1] += self.upper[:-1] * u[1:]
        return out

    def extend(self, u_int):
        """Add the edge values, projected onto the obstacle."""
        a, b = self.left
        c, d = self.right
        u0 = a * u_int[0] + b * u_int[1]
        un = c * u_int[-1] + d * u_int[-2]
        return np.concatenate(([max(u0, 0.0)], u_int, [max(un, 0.0)]))


def _build_operator(model, env: MarketEnv, grid: Grid) -> _Operator:
    x = grid.x
    h = grid.dx
    half_var = 0.5 * model.sigma ** 2
    eta = np.asarray(log_drift(model, x), dtype=float)
    n = grid.Nx

    lo = np.full(n, half_var / h ** 2)
    up = np.full(n, half_var / h ** 2)
    dg = np.full(n, -2.0 * half_var / h ** 2 - env.r)
    # central convection where the cell Peclet number allows it, upwind otherwise
    central = np.abs(eta) * h <= 2.0 * half_var
    lo += np.where(central, -eta / (2 * h), np.where(eta < 0, -eta / h, 0.0))
    up += np.where(central, eta / (2 * h), np.where(eta > 0, eta / h, 0.0))
    dg += np.where(central, 0.0, -np.abs(eta) / h)

    lower, diag, upper = lo[1:-1].copy(), dg[1:-1].copy(), up[1:-1].copy()
    if n == 3:
        raise ValueError("need at least two interior nodes")

    # ghost elimination: u_xx = u_x at nodes 1 and Nx-2
    a_l, b_l = 2.0 / (1.0 + h / 2), -(1.0 - h / 2) / (1.0 + h / 2)
    a_r, b_r = 2.0 / (1.0 - h / 2), -(1.0 + h / 2) / (1.0 - h / 2)
    diag[0] += lower[0] * a_l
    upper[0] += lower[0] * b_l
    lower[0] = 0.0
    diag[-1] += upper[-1] * a_r
    lower[-1] += upper[-1] * b_r
    upper[-1] = 0.0
    return _Operator(lower, diag, upper, (a_l, b_l), (a_r, b_r))


@njit(cache=True)
def _psor(lower, diag, upper, rhs, u, omega, tol, max_iter):
    """Projected SOR for M u >= rhs, u >= 0, (M u - rhs) u = 0.

    Returns (sweeps, residual); sweeps is -1 when max_iter was exhausted.
    """
    n = rhs.shape[0]
    res = np.inf
    for it in range(max_iter):
        change = 0.0
        size = 1.0
        for i in range(n):
            acc = rhs[i]
            if i > 0:
                acc -= lower[i] * u[i - 1]
            if i < n - 1:
                acc -= upper[i] * u[i + 1]
            new = u[i] + omega * (acc / diag[i] - u[i])
            if new < 0.0:
                new = 0.0
            d = abs(new - u[i])
            if d > change:
                change = d
            u[i] = new
            if new > size:
                size = new
        if change <= tol * size:
            res = _residual(lower, diag, upper, rhs, u)
            if res <= tol * size:
                return it + 1, res
    res = _residual(lower, diag, upper, rhs, u)
    return -1, res


@njit(cache=True)
def _residual(lower, diag, upper, rhs, u):
    n = rhs.shape[0]
    worst = 0.0
    for i in range(n):
        acc = diag[i] * u[i] - rhs[i]
        if i > 0:
            acc += lower[i] * u[i - 1]
        if i < n - 1:
            acc += upper[i] * u[i + 1]
        z = min(acc / diag[i], u[i])
        if abs(z) > worst:
            worst = abs(z)
    return worst


def _step_theta(k, opts):
    return 1.0 if k <= opts.implicit_steps else opts.theta


def evaluate_drive(field, grid: Grid):
    """Drive on every (t_n, s_i) node, evaluated exactly (no interpolation)."""
    t = grid.t[:, None]
    s = grid.s[None, :]
    return np.asarray(np.broadcast_to(field(t, s), (grid.Nt + 1, grid.Nx)), dtype=float)


def solve_vi(model, position, penalty, env: MarketEnv, grid: Grid,
             opts: SolverOptions | None = None, drive=None, s0=None) -> PremiumSurface:
    """Solve for the optimal liquidation premium on ``grid``.

    ``drive`` may replace the model drive with any callable g(t, s); the
    model then only supplies the dynamics.
    """
    opts = opts or SolverOptions()
    if isinstance(position, Stock):
        if not grid.T <= position.T:
            raise ValueError("grid horizon exceeds the stock horizon")
    elif not math.isclose(grid.T, position.T):
        raise ValueError("grid horizon must equal the option maturity")
    if drive is None:
        penalty = resolve_benchmark(penalty, position, env, model.sigma, s0)
        drive = DriveField(model, position, penalty, env)

    op = _build_operator(model, env, grid)
    g = evaluate_drive(drive, grid)
    dt = grid.dt
    Nt, Nx = grid.Nt, grid.Nx

    L = np.zeros((Nt + 1, Nx))
    residual = np.zeros(Nt + 1)
    iterations = np.zeros(Nt + 1, dtype=np.int64)
    u = np.zeros(Nx - 2)
    worst = 0.0
    for k in range(1, Nt + 1):
        n = Nt - k
        th = _step_theta(k, opts)
        gi_new = g[n, 1:-1]
        gi_old = g[n + 1, 1:-1]
        rhs = u + (1.0 - th) * dt * op.apply(u) + dt * (th * gi_new + (1.0 - th) * gi_old)
        lower = -th * dt * op.lower
        diag = 1.0 - th * dt * op.diag
        upper = -th * dt * op.upper
        u = u.copy()
        sweeps, res = _psor(lower, diag, upper, rhs, u, opts.omega, opts.tol, opts.max_iter)
        if sweeps < 0:
            msg = (f"PSOR did not converge at t={grid.t[n]:.6g} after {opts.max_iter} sweeps; "
                   f"worst residual {res:.3e}")
            if opts.raise_on_failure:
                raise ConvergenceError(msg, n, res)
            log.warning(msg)
        residual[n] = res
        iterations[n] = sweeps
        worst = max(worst, res)
        L[n] = op.extend(u)

    if hasattr(drive, "sign"):
        sign = drive.sign(grid.t[:, None], grid.s[None, :])
    else:
        sign = np.sign(g)
    surface = PremiumSurface(L=L, grid=grid, residual=residual, iterations=iterations,
                             drive=g, tol=opts.tol, drive_sign=np.asarray(sign, dtype=np.int8))
    return replace(surface, warnings=tuple(_edge_warnings(surface)))


def _edge_warnings(surface: PremiumSurface):
    L = surface.L[:-1]
    eps = surface.eps_region
    out = []
    if np.any(L[:, 0] > eps):
        out.append("delay region reaches the lower grid edge")
    if np.any(L[:, -1] > eps):
        out.append("delay region reaches the upper grid edge")
    return out


# --------------------------------------------------------------------------
# complementarity diagnostics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ComplementarityReport:
    t: np.ndarray
    max_residual: np.ndarray
    tol: float
    scale: float

    @property
    def worst(self):
        return float(np.max(self.max_residual))

    @property
    def ok(self):
        return self.worst <= self.tol * self.scale

    def failures(self):
        return np.flatnonzero(self.max_residual > self.tol * self.scale)


def complementarity_report(surface: PremiumSurface, model, env: MarketEnv,
                           opts: SolverOptions | None = None) -> ComplementarityReport:
    """Recompute the discrete complementarity residual of every step.

    Per node the residual is |min(r_i / M_ii, u_i)| with r = M u - rhs the
    row residual of the step's linear system; it is zero exactly when the
    step's complementarity problem is solved.
    """
    opts = opts or SolverOptions(tol=surface.tol)
    grid = surface.grid
    op = _build_operator(model, env, grid)
    dt = grid.dt
    g = surface.drive
    Nt = grid.Nt
    out = np.zeros(Nt + 1)
    for k in range(1, Nt + 1):
        n = Nt - k
        th = _step_theta(k, opts)
        u_old = surface.L[n + 1, 1:-1]
        u = surface.L[n, 1:-1]
        rhs = u_old + (1.0 - th) * dt * op.apply(u_old) + dt * (th * g[n, 1:-1] + (1 - th) * g[n + 1, 1:-1])
        lower = -th * dt * op.lower
        diag = 1.0 - th * dt * op.diag
        upper = -th * dt * op.upper
        out[n] = _residual(lower, diag, upper, rhs, np.ascontiguousarray(u))
    return ComplementarityReport(t=grid.t, max_residual=out, tol=surface.tol, scale=surface.scale)


__all__ = [
    "Grid", "default_grid", "SolverOptions", "PremiumSurface", "solve_vi",
    "ComplementarityReport", "complementarity_report", "ConvergenceError",
    "evaluate_drive", "REGION_EPS", "NUM_EPS",
]
