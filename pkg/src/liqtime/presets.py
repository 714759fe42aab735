"""Experiment presets, one per published figure panel.

Each preset is a list of runs; a run is a complete JSON-style config.
Panels that overlay several penalty levels carry one run per level.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

LN60 = math.log(60.0)
LN50 = math.log(50.0)


@dataclass(frozen=True)
class Preset:
    name: str
    figure: int
    panel: str
    kind: str  # "surface", "path" or "closed-form"
    runs: tuple
    note: str = ""
    aliases: tuple = field(default=())

    def configs(self):
        return [copy.deepcopy(r) for r in self.runs]


def _run(label, model, position, penalty, grid, r=0.03, s0=None, sim=None):
    cfg = {"label": label, "market": {"r": r}, "model": model, "position": position,
           "penalty": penalty, "grid": grid, "solver": {"tol": 1e-8, "omega": 1.2}}
    if s0 is not None:
        cfg["market"]["s0"] = s0
    if sim:
        cfg["simulation"] = sim
    return cfg


def _gbm(mu, sigma=0.3):
    return {"type": "gbm", "mu": mu, "sigma": sigma}


def _ou(beta, theta, sigma=0.3):
    return {"type": "exp-ou", "beta": beta, "theta": theta, "sigma": sigma}


def _sf(alpha, m=None):
    return {"type": "shortfall", "alpha": alpha, "m": m, "loss": {"type": "linear"}}


def _quad(alpha):
    return {"type": "quadratic", "alpha": alpha}


def _grid(s_min, s_max, Nx=600, Nt=500, T=None):
    g = {"s_min": s_min, "s_max": s_max, "Nx": Nx, "Nt": Nt}
    if T is not None:
        g["T"] = T
    return g


def _opt(kind, K=50.0, T=0.5):
    return {"type": kind, "K": K, "T": T}


STOCK = {"type": "stock", "T": 0.5}
MC = {"paths": 200_000, "seed": 20240101}
QUAD_ALPHAS = (0.01, 0.05, 0.1)

PRESETS = [
    Preset("realized-shortfall", 1, "", "path", (
        _run("alpha=1", _gbm(-0.05), _opt("call", 100.0, 1.0), _sf(1.0), {}, s0=100.0,
             sim={"paths": 1, "steps": 500, "seed": 1}),),
        note="single simulated path; 500 steps"),
    Preset("stock-sf", 2, "left", "surface", (
        _run("alpha=0.1", _gbm(0.08), STOCK, _sf(0.1, 50.0), _grid(1.0, 200.0), s0=50.0),)),
    Preset("call-sf", 2, "right", "surface", (
        _run("alpha=0.1", _gbm(0.08), _opt("call"), _sf(0.1), _grid(5.0, 250.0), s0=50.0,
             sim=MC),)),
    Preset("put-sf-left", 3, "left", "surface", (
        _run("alpha=0.001", _gbm(0.02), _opt("put"), _sf(0.001, 100.0), _grid(1.0, 300.0),
             s0=50.0, sim=MC),)),
    Preset("put-sf-right", 3, "right", "surface", (
        _run("alpha=0.01", _gbm(0.02), _opt("put"), _sf(0.01), _grid(1.0, 300.0), s0=50.0),)),
    Preset("straddle-bull", 4, "left", "surface", (
        _run("alpha=0.1", _gbm(0.08), _opt("straddle"), _sf(0.1), _grid(5.0, 250.0), s0=50.0),),
        note="maturity and volatility not stated for this figure; T=0.5, sigma=0.3"),
    Preset("straddle-bear", 4, "right", "surface", (
        _run("alpha=0.1", _gbm(0.02), _opt("straddle"), _sf(0.1), _grid(5.0, 250.0), s0=50.0),),
        note="maturity and volatility not stated for this figure; T=0.5, sigma=0.3"),
    Preset("stock-ou-left", 5, "left", "surface", (
        _run("alpha=0", _ou(4.0, LN60), STOCK, _sf(0.0), _grid(1.0, 300.0), s0=40.0, sim=MC),)),
    Preset("stock-ou-right", 5, "right", "surface", (
        _run("alpha=1.5", _ou(4.0, LN60), STOCK, _sf(1.5, 50.0),
             _grid(1e-4, 300.0, Nx=1200, Nt=1000), s0=50.0),),
        note="benchmark not stated for this figure; m=50"),
    Preset("call-ou-left", 6, "left", "surface", (
        _run("alpha=0.2", _ou(4.0, LN60), _opt("call"), _sf(0.2), _grid(5.0, 300.0), s0=50.0),),
        note="strike not stated for this figure; K=50, m=C(0,K)"),
    Preset("call-ou-right", 6, "right", "surface", (
        _run("alpha=0.001", _ou(0.2, LN50), _opt("call"), _sf(0.001), _grid(5.0, 300.0),
             s0=50.0),),
        note="strike not stated for this figure; K=50, m=C(0,K)"),
    Preset("put-ou-left", 7, "left", "surface", (
        _run("alpha=0", _ou(4.0, LN60), _opt("put"), _sf(0.0), _grid(5.0, 300.0), s0=50.0),)),
    Preset("put-ou-right", 7, "right", "surface", (
        _run("alpha=0.01", _ou(4.0, LN60), _opt("put", K=40.0), _sf(0.01), _grid(5.0, 300.0),
             s0=40.0),)),
    Preset("realized-quadratic", 8, "", "path", (
        _run("alpha=0.05", _gbm(-0.05), _opt("call", 100.0, 1.0), _quad(0.05), {}, s0=100.0,
             sim={"paths": 1, "steps": 500, "seed": 1}),),
        note="same path as the realized-shortfall preset"),
    Preset("perpetual-mu", 9, "left", "closed-form", tuple(
        _run(f"mu={mu}", _gbm(mu), {"type": "stock"}, _quad(0.2), {}, s0=1.0)
        for mu in (0.09, 0.08, 0.07)),
        note="figure states alpha=0.2; its quoted thresholds match alpha=0.1"),
    Preset("perpetual-sigma", 9, "right", "closed-form", tuple(
        _run(f"sigma={sig}", _gbm(0.08, sig), {"type": "stock"}, _quad(0.1), {}, s0=1.0)
        for sig in (0.25, 0.30, 0.35))),
    Preset("quad-gbm-call", 10, "left", "surface", tuple(
        _run(f"alpha={a}", _gbm(0.08), _opt("call"), _quad(a), _grid(5.0, 250.0), s0=50.0)
        for a in QUAD_ALPHAS),
        note="penalty levels not stated for this figure"),
    Preset("quad-gbm-put", 10, "right", "surface", tuple(
        _run(f"alpha={a}", _gbm(0.02), _opt("put"), _quad(a), _grid(1.0, 300.0), s0=50.0)
        for a in QUAD_ALPHAS),
        note="penalty levels not stated for this figure"),
    Preset("quad-ou-call", 11, "left", "surface", (
        _run("alpha=0.1", _ou(4.0, LN60), _opt("call"), _quad(0.1), _grid(5.0, 300.0),
             s0=50.0),)),
    Preset("quad-ou-put", 11, "right", "surface", (
        _run("alpha=0.1", _ou(4.0, LN60), _opt("put"), _quad(0.1), _grid(5.0, 300.0),
             s0=50.0),)),
]

_BY_ID = {}
for _p in PRESETS:
    _BY_ID[_p.name] = _p
    _BY_ID[f"fig{_p.figure}" + (f"-{_p.panel}" if _p.panel else "")] = _p


def get(name) -> Preset:
    try:
        return _BY_ID[name.lower()]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(sorted(_BY_ID))}") from None


def names():
    return sorted(_BY_ID)


def strip_label(cfg):
    cfg = copy.deepcopy(cfg)
    cfg.pop("label", None)
    return cfg
