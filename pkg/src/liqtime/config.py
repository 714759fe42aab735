"""JSON experiment configuration.

A configuration is one JSON object with these sections (all keys optional
unless noted)::

    {
      "market":   {"r": 0.03, "s0": 50},
      "model":    {"type": "gbm", "mu": 0.08, "sigma": 0.3}
                  | {"type": "exp-ou", "beta": 4, "theta": 4.094, "sigma": 0.3},
      "position": {"type": "stock" | "call" | "put" | "straddle", "K": 50, "T": 0.5},
      "penalty":  {"type": "shortfall", "alpha": 0.1, "m": null,
                   "loss": {"type": "linear"} | {"type": "power", "p": 2}
                           | {"type": "exponential", "gamma": 1}}
                  | {"type": "quadratic", "alpha": 0.1, "ou_stock_literal": false},
      "grid":     {"Nx": 400, "Nt": 400, "s_min": null, "s_max": null, "T": null},
      "solver":   {"tol": 1e-8, "omega": 1.2, "max_iter": 10000},
      "simulation": {"paths": 10000, "steps": 500, "seed": 0, "block_size": 1024,
                     "workers": null, "policy": "optimal"},
      "output":   {"dir": "out"}
    }

``market.r``, ``model`` and ``position`` are required.  ``theta`` may be
given as ``{"log": 60}`` for ln 60.  A ``"run"`` section written into
metadata files is ignored on reading, so metadata can be fed back in.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field

from .models import (GBM, Call, ExpOU, Exponential, Linear, MarketEnv, Power, Put,
                     QuadVar, Shortfall, Stock, Straddle)
from .vi_solver import Grid, SolverOptions, default_grid

SECTIONS = ("market", "model", "position", "penalty", "grid", "solver", "simulation", "output")


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists field-level messages."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _num(sec, key, where, required=True, default=None):
    v = sec.get(key, default)
    if v is None:
        if required:
            raise ConfigError(f"{where}.{key}: required")
        return None
    if isinstance(v, dict) and set(v) == {"log"}:
        v = math.log(float(v["log"]))
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _build(where, fn):
    try:
        return fn()
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_model(sec):
    kind = str(sec.get("type", "gbm")).lower()
    if kind == "gbm":
        return _build("model", lambda: GBM(_num(sec, "mu", "model"), _num(sec, "sigma", "model")))
    if kind in ("exp-ou", "expou", "ou"):
        return _build("model", lambda: ExpOU(_num(sec, "beta", "model"),
                                             _num(sec, "theta", "model"),
                                             _num(sec, "sigma", "model")))
    raise ConfigError(f"model.type: unknown model {kind!r}")


def parse_position(sec):
    kind = str(sec.get("type", "stock")).lower()
    T = _num(sec, "T", "position", default=math.inf if kind == "stock" else None)
    if kind == "stock":
        return _build("position", lambda: Stock(T))
    cls = {"call": Call, "put": Put, "straddle": Straddle}.get(kind)
    if cls is None:
        raise ConfigError(f"position.type: unknown position {kind!r}")
    return _build("position", lambda: cls(_num(sec, "K", "position"), T))


def parse_loss(sec):
    sec = sec or {"type": "linear"}
    kind = str(sec.get("type", "linear")).lower()
    if kind == "linear":
        return Linear()
    if kind == "power":
        return _build("penalty.loss", lambda: Power(_num(sec, "p", "penalty.loss")))
    if kind == "exponential":
        return _build("penalty.loss", lambda: Exponential(_num(sec, "gamma", "penalty.loss")))
    raise ConfigError(f"penalty.loss.type: unknown loss {kind!r}")


def parse_penalty(sec):
    kind = str(sec.get("type", "shortfall")).lower()
    alpha = _num(sec, "alpha", "penalty", default=0.0)
    if kind == "shortfall":
        m = _num(sec, "m", "penalty", required=False)
        loss = parse_loss(sec.get("loss"))
        return _build("penalty", lambda: Shortfall(alpha, m, loss))
    if kind in ("quadratic", "quadvar"):
        if "loss" in sec and sec["loss"] not in (None, {"type": "linear"}):
            raise ConfigError("penalty.loss: a loss function only applies to the shortfall penalty")
        return _build("penalty", lambda: QuadVar(alpha, bool(sec.get("ou_stock_literal", False))))
    raise ConfigError(f"penalty.type: unknown penalty {kind!r}")


@dataclass
class ExperimentConfig:
    raw: dict
    env: MarketEnv
    model: object
    position: object
    penalty: object
    s0: float | None
    solver: SolverOptions
    sim: dict = field(default_factory=dict)
    out_dir: str = "out"

    @property
    def horizon(self):
        g = self.raw.get("grid", {})
        T = g.get("T")
        if T is not None:
            return float(T)
        if math.isinf(self.position.T):
            raise ConfigError("grid.T: required for a perpetual stock")
        return self.position.T

    @property
    def spot(self):
        if self.s0 is not None:
            return self.s0
        if self.position.K is not None:
            return self.position.K
        raise ConfigError("market.s0: required for a stock position")

    def grid(self) -> Grid:
        g = self.raw.get("grid", {})
        Nx = int(g.get("Nx", 400))
        Nt = int(g.get("Nt", 400))
        T = self.horizon
        try:
            if g.get("s_min") is not None and g.get("s_max") is not None:
                return Grid.from_prices(float(g["s_min"]), float(g["s_max"]), Nx, T, Nt)
            return default_grid(self.model, self.position, self.spot, Nx, Nt, T)
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from None


def from_dict(raw) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    raw = copy.deepcopy(raw)
    raw.pop("run", None)
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        raise ConfigError([f"{k}: unknown section" for k in sorted(unknown)])
    problems = []
    for name in ("market", "model", "position"):
        if name not in raw:
            problems.append(f"{name}: section required")
    if problems:
        raise ConfigError(problems)

    market = raw["market"]
    env = _build("market", lambda: MarketEnv(_num(market, "r", "market")))
    s0 = _num(market, "s0", "market", required=False)
    if s0 is not None and not s0 > 0:
        raise ConfigError("market.s0: must be > 0")
    model = parse_model(raw["model"])
    position = parse_position(raw["position"])
    penalty = parse_penalty(raw.get("penalty", {"type": "shortfall", "alpha": 0.0}))
    sv = raw.get("solver", {})
    solver = _build("solver", lambda: SolverOptions(
        tol=float(sv.get("tol", 1e-8)), omega=float(sv.get("omega", 1.2)),
        max_iter=int(sv.get("max_iter", 10_000))))
    cfg = ExperimentConfig(raw, env, model, position, penalty, s0, solver,
                           dict(raw.get("simulation", {})),
                           str(raw.get("output", {}).get("dir", "out")))
    g = raw.get("grid", {})
    if g.get("T") is not None and not isinstance(position, Stock) \
            and not math.isclose(float(g["T"]), position.T):
        raise ConfigError("grid.T: must equal the option maturity")
    if isinstance(position, Stock) and g.get("T") is not None and float(g["T"]) > position.T:
        raise ConfigError("grid.T: exceeds the stock horizon")
    return cfg


def load(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return from_dict(raw)


def merge(base: dict, overrides: dict) -> dict:
    """Section-wise update; ``None`` values in ``overrides`` are skipped."""
    out = copy.deepcopy(base)
    for sec, vals in overrides.items():
        vals = {k: v for k, v in vals.items() if v is not None}
        if vals:
            out.setdefault(sec, {}).update(vals)
    return out
