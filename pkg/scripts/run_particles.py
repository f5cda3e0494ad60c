"""Exact particle simulation: temperature trajectory and velocity KS distance to the NESS."""

import argparse

import numpy as np

from thermokin.cli import ness_for
from thermokin.diagnostics import ks_statistic
from thermokin.io import RunConfig, load_config, write_timeseries
from thermokin.particles import Ensemble, simulate, spawn_streams


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--output", default="particles")
    args = p.parse_args()
    cfg = load_config(args.config) if args.config else RunConfig(n=args.n, t_end=args.t_end)
    model = cfg.model_config()
    ens = Ensemble.thermal(model, cfg.n, spawn_streams(cfg.seed, 1)[0])
    rec = simulate(ens, cfg.t_end, cfg.checkpoint_times(), snapshot=True)
    ness = ness_for(model)
    ks = [ks_statistic(v[:, 0], ness.cdf).D if ness else np.nan for _, v in rec.snapshots]
    path = write_timeseries(f"{args.output}_timeseries.csv", rec.times, rec.T_hat, rec.T_sched, ks_D=ks)
    for t, T, Ts, D in zip(rec.times, rec.T_hat, rec.T_sched, ks):
        print(f"t={t:6.2f}  T_hat={T:.5f}  T_sched={Ts:.5f}  KS={D:.4f}")
    print(path)


if __name__ == "__main__":
    main()
