"""Fitted exponential decay rate of the homogeneous L1 distance against the reservoir rate eta."""

import argparse

import numpy as np

from thermokin.model import DomainSpec, ModelConfig, ReservoirSet
from thermokin.pde import SolverConfig, distance_band_window, fit_exponential_rate, solve_homogeneous


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--etas", type=float, nargs="+", default=[0.5, 1.0, 2.0, 4.0])
    p.add_argument("--model", choices=("kfp", "bgk"), default="kfp")
    p.add_argument("--n-v", type=int, default=1024)
    args = p.parse_args()
    print("eta    fitted_c   c/eta   residual")
    for eta in args.etas:
        res = ReservoirSet.from_pairs([(eta / 2, 1.0), (eta / 2, 3.0)])
        model = ModelConfig(res, DomainSpec(), args.model, alpha=1.0, T0=3.0)
        t_end = 12.0 / eta
        r = solve_homogeneous(SolverConfig.for_model(model, args.n_v, t_end=t_end), model, None,
                              np.linspace(t_end / 60, t_end, 60))
        fit = fit_exponential_rate(r.times, r.l1_to_ness, distance_band_window(r.times, r.l1_to_ness, 1e-4, 1e-1))
        print(f"{eta:<6g} {fit.c:9.4f} {fit.c / eta:7.4f} {fit.residual:9.2e}")


if __name__ == "__main__":
    main()
