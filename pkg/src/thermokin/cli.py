"""Command line entry point: ``thermokin {ness,simulate,solve,verify}``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace

import numpy as np

from .diagnostics import ks_statistic
from .grids import VelocityGrid
from .io import (ConfigError, RunConfig, load_config, write_mixing, write_ness, write_snapshot,
                 write_timeseries, write_velocity_grid)
from .model import ModelConfig
from .particles import Ensemble, simulate, spawn_streams
from .pde import SolverConfig, perturbed_initial, solve_homogeneous, solve_spatial
from .steady_state import MixingMeasure, NessDensity, UnsupportedClosedForm


def _reservoir_arg(text: str):
    try:
        pairs = [p.split(":") for p in text.split(",") if p.strip()]
        return tuple(float(e) for e, _ in pairs), tuple(float(T) for _, T in pairs)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected eta:T[,eta:T...]") from exc


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {}
    for key in ("model", "n", "t_end", "seed", "alpha", "T0", "n_v", "n_x", "checkpoints", "output"):
        val = getattr(args, key, None)
        if val is not None:
            over[key] = val
    if getattr(args, "reservoirs", None):
        over["etas"], over["temps"] = args.reservoirs
    return replace(cfg, **over)


def ness_for(model: ModelConfig) -> NessDensity | None:
    res = model.reservoirs
    try:
        if model.kind == "bgk":
            return NessDensity("bgk", res, model.alpha) if model.alpha > 0 else NessDensity("pure", res)
        if res.k == 1:
            return NessDensity("pure", res)
        return NessDensity("fp", res)
    except (UnsupportedClosedForm, ValueError):
        return None


def cmd_ness(args) -> int:
    cfg = _config(args)
    model = cfg.model_config()
    ness = ness_for(model)
    if ness is None:
        print("no closed-form steady state for this reservoir set", file=sys.stderr)
        return 2
    grid = VelocityGrid(cfg.v_max or 10 * math.sqrt(float(np.max(model.reservoirs.temps))), cfg.n_v)
    out = write_ness(f"{cfg.output}_ness.csv", grid.v, ness(grid.v))
    print(out)
    if ness.kind == "fp":
        mm = MixingMeasure.from_reservoirs(model.reservoirs)
        T = np.linspace(mm.T1, mm.T2, 1001)[1:-1]
        print(write_mixing(f"{cfg.output}_mixing.csv", T, mm.density(T)))
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    model = cfg.model_config()
    rng = spawn_streams(cfg.seed, 1)[0]
    ens = Ensemble.thermal(model, cfg.n, rng)
    rec = simulate(ens, cfg.t_end, cfg.checkpoint_times(), mode=args.mode, snapshot=True)
    ness = ness_for(model)
    ks, tv = [], []
    for (x, v), hist in zip(rec.snapshots, rec.v_hist):
        if ness is None or cfg.n < 100:
            ks.append(math.nan)
            tv.append(math.nan)
            continue
        ks.append(ks_statistic(v[:, 0], ness.cdf).D)
        F = np.concatenate([[0.0], ness.cdf(hist.edges[0]), [1.0]])
        tv.append(0.5 * float(np.abs(hist.probabilities() - np.diff(F)).sum()))
    print(write_timeseries(f"{cfg.output}_timeseries.csv", rec.times, rec.T_hat, rec.T_sched, None, ks, tv))
    return 0


def cmd_solve(args) -> int:
    cfg = _config(args)
    model = cfg.model_config()
    scfg = SolverConfig(cfg.v_max or 10 * math.sqrt(max(float(np.max(model.reservoirs.temps)), cfg.T0)),
                        cfg.n_v, cfg.n_x, cfg.dt, cfg.t_end, cfg.transport)
    cps = cfg.checkpoint_times()
    if args.spatial:
        r = solve_spatial(scfg, model, perturbed_initial(scfg, model, args.amplitude), cps)
        final = write_snapshot(f"{cfg.output}_final.csv", r.final)
    else:
        r = solve_homogeneous(scfg, model, None, cps)
        final = write_velocity_grid(f"{cfg.output}_final.csv", r.final)
    print(write_timeseries(f"{cfg.output}_timeseries.csv", r.times, r.T_grid, r.T_sched, r.l1_to_ness))
    print(final)
    return 0


def cmd_verify(args) -> int:
    from .acceptance import CRITERIA, format_table

    numbers = sorted(CRITERIA) if not args.only else [int(k) for k in args.only.split(",")]
    results = []
    for k in numbers:
        r = CRITERIA[k]()
        results.append(r)
        if args.verbose:
            print(r.line(), flush=True)
    print(format_table(results))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed"
          + (f"; failed: {', '.join(map(str, failed))}" if failed else ""))
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thermokin", description=__doc__)
    p.add_argument("--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--reservoirs", type=_reservoir_arg, help="eta:T pairs, e.g. 1:1,1:3")
        sp.add_argument("--model", choices=("kfp", "bgk"))
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--T0", type=float)
        sp.add_argument("--output", help="output path prefix")

    sp = sub.add_parser("ness", help="dump the closed-form steady state and mixing density")
    common(sp)
    sp.add_argument("--n-v", dest="n_v", type=int)
    sp.set_defaults(func=cmd_ness)

    sp = sub.add_parser("simulate", help="exact particle simulation")
    common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--t-end", dest="t_end", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--checkpoints", type=int)
    sp.add_argument("--mode", choices=("schedule", "self-consistent"), default="schedule")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("solve", help="grid solver")
    common(sp)
    kind = sp.add_mutually_exclusive_group(required=True)
    kind.add_argument("--homogeneous", action="store_true")
    kind.add_argument("--spatial", action="store_true")
    sp.add_argument("--t-end", dest="t_end", type=float)
    sp.add_argument("--n-v", dest="n_v", type=int)
    sp.add_argument("--n-x", dest="n_x", type=int)
    sp.add_argument("--checkpoints", type=int)
    sp.add_argument("--amplitude", type=float, default=0.5, help="initial density perturbation (spatial)")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    sp.add_argument("--only", help="comma-separated criterion numbers")
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper())
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
