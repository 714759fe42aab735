"""Command-line entry point: ``liqtime <subcommand> [options]``.

Subcommands: price, drive-surface, solve, regions, closed-form, simulate,
reproduce-figure.  Options can come from a JSON config (``--config``, see
:mod:`liqtime.config`) and individual flags override config keys.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import artifacts, presets
from .closed_form import TimingClass, classify_trivial, perpetual_quadratic_gbm
from .config import ConfigError, ExperimentConfig, from_dict, load, merge
from .drive import DriveField
from .models import resolve_benchmark
from .pricing import price
from .regions import boundedness_check, extract_regions, premium_boundary, zero_contour
from .simulation import evaluate_policy, simulate_paths
from .vi_solver import ConvergenceError, complementarity_report, evaluate_drive, solve_vi

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("liqtime")

_NOTICES = {
    TimingClass.SELL_NOW: "trivial timing: the drive is non-positive everywhere, "
                          "so selling immediately is optimal and the premium is zero",
    TimingClass.HOLD_TO_MATURITY: "trivial timing: the drive is non-negative everywhere, "
                                  "so holding to maturity is optimal",
}


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------

def _grid_pair(text):
    try:
        nx, nt = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected Nx,Nt") from None
    return nx, nt


def _common(p):
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--out", help="output directory (default: config output.dir or 'out')")
    m = p.add_argument_group("market and model")
    m.add_argument("--r", type=float)
    m.add_argument("--s0", type=float, help="initial price (benchmark, grid centre, simulation)")
    m.add_argument("--model", choices=["gbm", "exp-ou"])
    m.add_argument("--mu", type=float)
    m.add_argument("--sigma", type=float)
    m.add_argument("--beta", type=float)
    m.add_argument("--theta", type=float)
    q = p.add_argument_group("position and penalty")
    q.add_argument("--position", choices=["stock", "call", "put", "straddle"])
    q.add_argument("--K", type=float)
    q.add_argument("--T", type=float, help="maturity (options) or holding horizon (stock)")
    q.add_argument("--penalty", choices=["shortfall", "quadratic"])
    q.add_argument("--alpha", type=float)
    q.add_argument("--m", type=float, help="shortfall benchmark (default V(0, s0))")
    q.add_argument("--loss", choices=["linear", "power", "exponential"])
    q.add_argument("--p", type=float)
    q.add_argument("--gamma", type=float)
    q.add_argument("--gou-stock-literal", action="store_true", default=None,
                   help="exp-OU stock quadratic drive without the sigma^2 factor")
    g = p.add_argument_group("grid and solver")
    g.add_argument("--grid", type=_grid_pair, metavar="NX,NT")
    g.add_argument("--s-min", type=float)
    g.add_argument("--s-max", type=float)
    g.add_argument("--horizon", type=float, help="solve horizon for a stock (default T)")
    g.add_argument("--tol", type=float)
    g.add_argument("--omega", type=float)
    g.add_argument("--max-iter", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="liqtime", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price and delta at one (t, s)")
    _common(p)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--s", type=float, required=True)

    p = sub.add_parser("drive-surface", help="drive function on the grid plus its zero contour")
    _common(p)

    p = sub.add_parser("solve", help="solve for the liquidation premium")
    _common(p)

    p = sub.add_parser("regions", help="solve and extract sell/delay regions and boundaries")
    _common(p)

    p = sub.add_parser("closed-form", help="perpetual stock threshold under GBM, quadratic penalty")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--csv", help="also write premium samples s,premium to this file")
    p.add_argument("--s-max", type=float, help="largest sampled price (default 1.5 s*)")
    p.add_argument("--samples", type=int, default=200)

    p = sub.add_parser("simulate", help="Monte Carlo evaluation of a liquidation policy")
    _common(p)
    p.add_argument("--paths", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--policy", help="optimal | hold | sell-now | surface, region or boundary CSV")
    p.add_argument("--paths-csv", type=int, metavar="N", help="write the first N paths")

    p = sub.add_parser("reproduce-figure", help="run a figure preset")
    p.add_argument("figure", nargs="?", help="preset id, e.g. stock-ou-right or fig5-right")
    p.add_argument("--out", default="figures")
    p.add_argument("--list", action="store_true", help="list preset ids")
    p.add_argument("--workers", type=int)
    p.add_argument("--paths", type=int, help="Monte Carlo paths for presets with a simulation")
    return parser


def _overrides(a):
    grid = {}
    if a.grid:
        grid["Nx"], grid["Nt"] = a.grid
    grid.update({"s_min": a.s_min, "s_max": a.s_max, "T": a.horizon})
    pen = {"type": a.penalty, "alpha": a.alpha, "m": a.m, "ou_stock_literal": a.gou_stock_literal}
    if a.loss:
        pen["loss"] = {"type": a.loss, "p": a.p, "gamma": a.gamma}
    ov = {
        "market": {"r": a.r, "s0": a.s0},
        "model": {"type": a.model, "mu": a.mu, "sigma": a.sigma, "beta": a.beta, "theta": a.theta},
        "position": {"type": a.position, "K": a.K, "T": a.T},
        "penalty": pen,
        "grid": grid,
        "solver": {"tol": a.tol, "omega": a.omega, "max_iter": a.max_iter},
        "output": {"dir": a.out},
    }
    if hasattr(a, "paths"):
        ov["simulation"] = {"paths": a.paths, "steps": a.steps, "seed": a.seed,
                            "workers": a.workers, "policy": a.policy}
    return ov


def _clean_loss(raw):
    loss = raw.get("penalty", {}).get("loss")
    if isinstance(loss, dict):
        raw["penalty"]["loss"] = {k: v for k, v in loss.items() if v is not None}
    return raw


def config_from_args(a) -> ExperimentConfig:
    base = {}
    if a.config:
        base = load(a.config).raw
    raw = _clean_loss(merge(base, _overrides(a)))
    return from_dict(raw)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _resolved(cfg: ExperimentConfig):
    return resolve_benchmark(cfg.penalty, cfg.position, cfg.env, cfg.model.sigma, cfg.s0)


def _metadata(cfg, command, grid=None, **extra):
    raw = dict(cfg.raw)
    run = {"command": command}
    pen = _resolved(cfg)
    if getattr(pen, "m", None) is not None:
        run["benchmark_m"] = pen.m
    if grid is not None:
        run["grid_bounds"] = {"x_min": grid.x_min, "x_max": grid.x_max, "s_min": math.exp(grid.x_min),
                              "s_max": math.exp(grid.x_max), "Nx": grid.Nx, "Nt": grid.Nt, "T": grid.T}
    run.update(extra)
    raw["run"] = run
    return raw


def cmd_price(a, cfg):
    q = price(cfg.position, cfg.env, cfg.model.sigma, a.t, a.s)
    row = (a.t, a.s, q.value, q.delta, q.d1, q.d2)
    header = ("t", "s", "value", "delta", "d1", "d2")
    if a.out:
        artifacts.write_columns(os.path.join(a.out, "price.csv"), header, [[v] for v in row])
    else:
        print(",".join(header))
        print(",".join(format(float(v), ".17g") for v in row))
    return EXIT_OK


def cmd_drive_surface(a, cfg):
    grid = cfg.grid()
    pen = _resolved(cfg)
    field = DriveField(cfg.model, cfg.position, pen, cfg.env)
    g = evaluate_drive(field, grid)
    out = cfg.out_dir
    artifacts.write_drive(os.path.join(out, "drive.csv"), grid, g)
    artifacts.write_boundaries(os.path.join(out, "zero_contour.csv"), zero_contour(field, grid))
    artifacts.write_json(os.path.join(out, "metadata.json"), _metadata(cfg, "drive-surface", grid))
    return EXIT_OK


def _solve(cfg):
    grid = cfg.grid()
    timing = classify_trivial(cfg.model, cfg.position, cfg.penalty, cfg.env)
    surface = solve_vi(cfg.model, cfg.position, cfg.penalty, cfg.env, grid, cfg.solver, s0=cfg.s0)
    notice = _NOTICES.get(timing)
    for w in surface.warnings:
        log.warning(w)
    if notice:
        print(notice, file=sys.stderr)
    return surface, timing, notice


def _write_solution(cfg, surface, timing, notice, out, command):
    artifacts.write_surface(os.path.join(out, "surface.csv"), surface)
    artifacts.write_residuals(os.path.join(out, "residuals.csv"), surface)
    rep = complementarity_report(surface, cfg.model, cfg.env, cfg.solver)
    meta = _metadata(cfg, command, surface.grid, timing=timing.value, notice=notice,
                     warnings=list(surface.warnings), worst_residual=rep.worst,
                     residual_ok=rep.ok, scale=surface.scale)
    artifacts.write_json(os.path.join(out, "metadata.json"), meta)


def cmd_solve(a, cfg):
    surface, timing, notice = _solve(cfg)
    _write_solution(cfg, surface, timing, notice, cfg.out_dir, "solve")
    return EXIT_OK


def region_artifacts(cfg, surface, out):
    regions = extract_regions(surface)
    pen = _resolved(cfg)
    field = DriveField(cfg.model, cfg.position, pen, cfg.env)
    artifacts.write_regions(os.path.join(out, "regions.csv"), regions)
    artifacts.write_boundaries(os.path.join(out, "boundary.csv"), premium_boundary(surface, regions))
    artifacts.write_boundaries(os.path.join(out, "zero_contour.csv"), zero_contour(field, surface.grid))
    bnd = boundedness_check(regions)
    counts = regions.sell_component_counts()
    summary = {
        "sell_components_t0": int(counts[0]),
        "max_sell_components": int(counts.max()),
        "delay_intervals_t0": regions.intervals(0),
        "delay_bounded": bnd.delay_bounded,
        "max_delay_s": bnd.max_delay_s,
        "warnings": list(bnd.warnings),
    }
    artifacts.write_json(os.path.join(out, "regions.json"), summary)
    return regions, summary


def cmd_regions(a, cfg):
    surface, timing, notice = _solve(cfg)
    out = cfg.out_dir
    _write_solution(cfg, surface, timing, notice, out, "regions")
    _, summary = region_artifacts(cfg, surface, out)
    print(f"sell components at t=0: {summary['sell_components_t0']}; "
          f"delay bounded: {summary['delay_bounded']}")
    return EXIT_OK


def cmd_closed_form(a):
    try:
        sol = perpetual_quadratic_gbm(a.mu, a.r, a.sigma, a.alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(f"timing={sol.timing.value}")
    print(f"lambda={sol.lambda_exp:.10g}")
    print(f"B={sol.B:.10g}")
    print(f"s_star={sol.s_star:.10g}")
    if a.csv and sol.timing is TimingClass.NON_TRIVIAL:
        s_max = a.s_max or 1.5 * sol.s_star
        s = np.linspace(s_max / a.samples, s_max, a.samples)
        artifacts.write_columns(a.csv, ("s", "premium"), (s, sol.premium(s)))
    return EXIT_OK


def _load_policy(source, cfg):
    if source in (None, "optimal"):
        return _solve(cfg)[0]
    if source in ("hold", "sell-now"):
        return source
    if not os.path.exists(source):
        raise ConfigError(f"simulation.policy: no such file {source!r}")
    header = artifacts.read_header(source)
    if header == ["t", "s", "L"]:
        surface = artifacts.read_surface(source)
        pen = _resolved(cfg)
        field = DriveField(cfg.model, cfg.position, pen, cfg.env)
        sign = field.sign(surface.grid.t[:, None], surface.grid.s[None, :]).astype(np.int8)
        return artifacts.read_surface(source, drive_sign=sign)
    if header == ["t", "s", "class"]:
        return artifacts.read_regions(source)
    if header == ["branch_id", "t", "s"]:
        sibling = os.path.join(os.path.dirname(source), "regions.csv")
        if os.path.exists(sibling):
            return artifacts.read_regions(sibling)
        raise ConfigError("simulation.policy: a boundary CSV needs its regions.csv alongside")
    raise ConfigError(f"simulation.policy: unrecognised CSV header {header}")


def simulation_summary(cfg, policy, workers=None, paths=None):
    sim = cfg.sim
    n_paths = int(paths or sim.get("paths", 10_000))
    est = evaluate_policy(policy, cfg.model, cfg.position, cfg.penalty, cfg.env, cfg.spot,
                          n_paths, int(sim.get("seed", 0)), T=cfg.horizon,
                          n_steps=int(sim.get("steps", 500)),
                          block_size=int(sim.get("block_size", 1024)),
                          workers=workers or sim.get("workers"))
    return est


def write_paths(cfg, path, n):
    sim = cfg.sim
    steps = int(sim.get("steps", 500))
    batches = simulate_paths(cfg.model, cfg.position, cfg.penalty, cfg.env, cfg.spot, n, steps,
                             int(sim.get("seed", 0)), T=cfg.horizon,
                             block_size=int(sim.get("block_size", 1024)))
    cols = [[], [], [], [], []]
    for batch in batches:
        for j in range(len(batch)):
            for c, v in zip(cols, (np.full(len(batch.times), batch.first + j), batch.times,
                                   batch.prices[j], batch.values[j], batch.penalty[j])):
                c.append(v)
    artifacts.write_columns(path, ("path", "t", "S", "V", "penalty"),
                            [np.concatenate(c) for c in cols],
                            fmt=["%d", artifacts.FLOAT, artifacts.FLOAT, artifacts.FLOAT, artifacts.FLOAT])


def cmd_simulate(a, cfg):
    policy = _load_policy(cfg.sim.get("policy"), cfg)
    est = simulation_summary(cfg, policy)
    out = cfg.out_dir
    artifacts.write_json(os.path.join(out, "simulate.json"), est.as_dict())
    if a.paths_csv:
        write_paths(cfg, os.path.join(out, "paths.csv"), a.paths_csv)
    print(f"mean={est.mean:.10g} stderr={est.stderr:.3g} n={est.n} exits={est.exits}")
    return EXIT_OK


def _slug(label):
    return label.replace("=", "_").replace(" ", "_")


def run_preset(preset, out, workers=None, paths=None):
    """Run every configuration of ``preset`` into ``out/<preset>/<label>``."""
    results = []
    for raw in preset.configs():
        label = raw.pop("label")
        d = os.path.join(out, preset.name, _slug(label))
        raw["output"] = {"dir": d}
        cfg = from_dict(raw)
        if preset.kind == "closed-form":
            m = cfg.model
            sol = perpetual_quadratic_gbm(m.mu, cfg.env.r, m.sigma, cfg.penalty.alpha)
            s = np.linspace(0.05, 1.5 * sol.s_star, 300)
            artifacts.write_columns(os.path.join(d, "premium.csv"), ("s", "premium"), (s, sol.premium(s)))
            info = {"s_star": sol.s_star, "lambda": sol.lambda_exp, "B": sol.B}
            artifacts.write_json(os.path.join(d, "metadata.json"),
                                 _metadata(cfg, "reproduce-figure", preset=preset.name, **info))
            results.append((label, info))
        elif preset.kind == "path":
            write_paths(cfg, os.path.join(d, "paths.csv"), int(cfg.sim.get("paths", 1)))
            artifacts.write_json(os.path.join(d, "metadata.json"),
                                 _metadata(cfg, "reproduce-figure", preset=preset.name))
            results.append((label, {}))
        else:
            surface, timing, notice = _solve(cfg)
            _write_solution(cfg, surface, timing, notice, d, "reproduce-figure")
            _, summary = region_artifacts(cfg, surface, d)
            if paths:
                est = simulation_summary(cfg, surface, workers, paths)
                summary["simulation"] = est.as_dict()
                summary["solver_J0"] = float(price(cfg.position, cfg.env, cfg.model.sigma, 0.0,
                                                   cfg.spot).value) + float(surface.interp0(cfg.spot))
                artifacts.write_json(os.path.join(d, "simulate.json"), summary)
            results.append((label, summary))
    return results


def cmd_reproduce(a):
    if a.list or not a.figure:
        for p in presets.PRESETS:
            alias = f"fig{p.figure}" + (f"-{p.panel}" if p.panel else "")
            print(f"{p.name:20s} {alias:12s} {p.kind:12s} {p.note}")
        return EXIT_OK
    try:
        preset = presets.get(a.figure)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    for label, info in run_preset(preset, a.out, a.workers, a.paths):
        brief = {k: v for k, v in info.items() if k in ("s_star", "sell_components_t0", "delay_bounded")}
        print(f"{preset.name} [{label}] {brief}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if a.command == "closed-form":
            return cmd_closed_form(a)
        if a.command == "reproduce-figure":
            return cmd_reproduce(a)
        cfg = config_from_args(a)
        handler = {"price": cmd_price, "drive-surface": cmd_drive_surface, "solve": cmd_solve,
                   "regions": cmd_regions, "simulate": cmd_simulate}[a.command]
        return handler(a, cfg)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
