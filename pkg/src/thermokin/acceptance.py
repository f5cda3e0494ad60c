"""Acceptance criteria as plain functions, shared by the test suite and ``thermokin verify``.

Every criterion returns a :class:`CriterionResult`; the runtime budget is part
of the pass condition. Seeds are fixed so results are reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, stats

from .diagnostics import (FiniteKernel, doeblin_submultiplicativity_check, ks_statistic,
                          uniformity_chisquare)
from .grids import VelocityGrid
from .model import DomainSpec, ModelConfig, PhasePoint, ReservoirSet, TemperatureSchedule
from .ou_kernel import (asymptotic_bounds_check, doeblin_lower_bound, ou_moments, ou_second_moments,
                        ou_step_arrays, wrapped_conditional_density)
from .particles import (Ensemble, coupled_tv_experiment, event_e_frequency, simulate_bgk, simulate_kfp,
                        spawn_streams)
from .pde import (SolverConfig, distance_band_window, fit_exponential_rate, perturbed_initial,
                  solve_homogeneous, solve_spatial)
from .steady_state import MixingMeasure, NessDensity, fp_ness_density, stationarity_residual

ROOT_SEED = 20240917
TWO_BATHS = ReservoirSet.from_pairs([(1.0, 1.0), (1.0, 3.0)])


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        return (f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.title}: {self.detail} "
                f"({self.seconds:.1f}s / {self.budget:g}s)")


def _run(number: int, title: str, budget: float, body: Callable[[], tuple[bool, str]]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = body()
    dt = time.perf_counter() - t0
    return CriterionResult(number, title, bool(ok and dt < budget), detail, dt, budget)


def _rng(stream: int) -> np.random.Generator:
    return spawn_streams(ROOT_SEED, stream + 1)[stream]


# 1 -------------------------------------------------------------------------

def temperature_law(n: int = 100_000, n_checkpoints: int = 20, t_end: float = 4.0) -> CriterionResult:
    def body():
        model = ModelConfig(TWO_BATHS, DomainSpec(), "kfp", T0=3.0)
        ens = Ensemble.thermal(model, n, _rng(1))
        rec = simulate_kfp(ens, t_end, t_end * np.arange(1, n_checkpoints + 1) / n_checkpoints)
        z = [abs(a - b) / rec.standard_error(i) for i, (a, b) in enumerate(zip(rec.T_hat, rec.T_sched))]
        return max(z) < 3.0, f"max |T_hat - T(t)| = {max(z):.2f} SE over {len(z)} checkpoints"
    return _run(1, "temperature law", 60, body)


# 2 -------------------------------------------------------------------------

def ness_stationarity() -> CriterionResult:
    def body():
        vmax = 10 * math.sqrt(3.0)
        res = {}
        for n in (1024, 2048, 4096):
            g = VelocityGrid(vmax, n)
            g = g.with_values(fp_ness_density(g.v, TWO_BATHS))
            res[n] = stationarity_residual(g, TWO_BATHS)
        r1, r2 = res[1024] / res[2048], res[2048] / res[4096]
        ok = res[2048] < 1e-4 and 3.5 < r1 < 4.5 and 3.5 < r2 < 4.5
        return ok, f"residual(2048) = {res[2048]:.2e}, refinement ratios {r1:.2f}, {r2:.2f}"
    return _run(2, "NESS stationarity", 5, body)


# 3 -------------------------------------------------------------------------

def _alg_integral(f, a, b, alpha, beta):
    return integrate.quad(f, a, b, weight="alg", wvar=(alpha, beta), epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def mixing_identities(n_samples: int = 100_000) -> CriterionResult:
    def body():
        worst_mass = worst_mean = 0.0
        for eta in (0.5, 1.0, 2.0, 4.0):
            mm = MixingMeasure.from_reservoirs(ReservoirSet.from_pairs([(eta / 2, 1.0), (eta / 2, 3.0)]))
            e = eta / 2 - 1
            # independent oracle: QUADPACK with the algebraic endpoint weight
            left = lambda f: mm.c1 * _alg_integral(f, mm.T1, mm.T_inf, 0.0, e)
            right = lambda f: mm.c2 * _alg_integral(f, mm.T_inf, mm.T2, e, 0.0)
            mass = left(lambda t: 1.0) + right(lambda t: 1.0)
            mean = left(lambda t: t) + right(lambda t: t)
            worst_mass = max(worst_mass, abs(mass - 1), abs(mm.total_mass() - 1))
            worst_mean = max(worst_mean, abs(mean - mm.T_inf), abs(mm.mean() - mm.T_inf))
        rng = _rng(3)
        frac_ok = True
        notes = []
        for eta, near in ((0.02, "T_inf"), (400.0, "baths")):
            mm = MixingMeasure.from_reservoirs(ReservoirSet.from_pairs([(eta / 2, 1.0), (eta / 2, 3.0)]))
            T = mm.sample(rng, n_samples)
            if near == "T_inf":
                frac = np.mean(np.abs(T - mm.T_inf) < 0.05)
            else:
                frac = np.mean(np.minimum(np.abs(T - mm.T1), np.abs(T - mm.T2)) < 0.05)
            # exact probability of the 0.05-neighbourhood is 0.05^(eta/2) or 1 - 0.95^(eta/2)
            exact = 0.05 ** (eta / 2) if near == "T_inf" else 1 - 0.95 ** (eta / 2)
            se = math.sqrt(max(exact * (1 - exact), 1.0 / n_samples) / n_samples)
            frac_ok &= frac > 0.9 and abs(frac - exact) < 3 * se + 1e-12
            notes.append(f"eta={eta:g}: {frac:.4f} near {near}")
        ok = worst_mass < 1e-10 and worst_mean < 1e-10 and frac_ok
        return ok, f"|mass-1| <= {worst_mass:.1e}, |mean-T_inf| <= {worst_mean:.1e}; " + "; ".join(notes)
    return _run(3, "mixing-measure identities", 10, body)


# 4 -------------------------------------------------------------------------

def homogeneous_convergence() -> CriterionResult:
    def body():
        model = ModelConfig(TWO_BATHS, DomainSpec(), "kfp", T0=3.0)
        cfg = SolverConfig.for_model(model, 1024, t_end=20.0)
        r = solve_homogeneous(cfg, model, checkpoints=np.arange(1, 401) * 0.05)
        win = distance_band_window(r.times, r.l1_to_ness, 1e-2, 1e-1)
        fit = fit_exponential_rate(r.times, r.l1_to_ness, win)
        ok = r.l1_to_ness[-1] < 1e-3 and fit.c > 0 and fit.residual < 0.05
        return ok, (f"L1(t=20) = {r.l1_to_ness[-1]:.2e}, fitted rate {fit.c:.3f}, "
                    f"log residual {fit.residual:.3f}")
    return _run(4, "homogeneous convergence", 120, body)


# 5 -------------------------------------------------------------------------

def bgk_ness(n: int = 100_000) -> CriterionResult:
    def body():
        model = ModelConfig(TWO_BATHS, DomainSpec(), "bgk", alpha=1.0, T0=3.0)
        r = solve_homogeneous(SolverConfig.for_model(model, 1024, t_end=20.0), model)
        rec = simulate_bgk(Ensemble.thermal(model, n, _rng(5)), 20.0, snapshot=True)
        ks = ks_statistic(rec.snapshots[-1][1][:, 0], NessDensity("bgk", TWO_BATHS, 1.0).cdf)
        ok = r.l1_to_ness[-1] < 1e-6 and ks.passed
        return ok, f"solver L1 = {r.l1_to_ness[-1]:.1e}, particle KS D = {ks.D:.4f} (crit {ks.critical:.4f})"
    return _run(5, "BGK NESS", 60, body)


# 6 -------------------------------------------------------------------------

def _quad_moments(s, u, sched: TemperatureSchedule):
    T = lambda r: 2.0 * float(sched(s + r))
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    vv = integrate.quad(lambda r: T(r) * math.exp(-2 * (u - r)), 0, u, **opts)[0]
    xv = integrate.quad(lambda r: T(r) * math.exp(-(u - r)) * -math.expm1(-(u - r)), 0, u, **opts)[0]
    xx = integrate.quad(lambda r: T(r) * math.expm1(-(u - r)) ** 2, 0, u, **opts)[0]
    return xx, vv, xv


def ou_exactness(n_draws: int = 500, n_ck: int = 20_000) -> CriterionResult:
    def body():
        rng = _rng(6)
        special = [1.0, 2.0, 1 - 1e-7, 1 + 1e-7, 2 - 1e-7, 2 + 1e-7, 1 + 1e-4, 2 - 1e-4]
        worst = 0.0
        for i in range(n_draws):
            eta = special[i] if i < len(special) else float(rng.uniform(0.05, 8.0))
            sched = TemperatureSchedule(float(rng.uniform(0.5, 4)), float(rng.uniform(0.2, 6)), eta)
            s = float(rng.uniform(0, 3))
            u = float(np.exp(rng.uniform(np.log(1e-3), np.log(20.0))))
            got = ou_second_moments(s, u, sched)
            ref = _quad_moments(s, u, sched)
            worst = max(worst, max(abs(float(a) - b) / abs(b) for a, b in zip(got, ref)))
        # Chapman-Kolmogorov: one exact step of u1 + u2 against two exact steps
        sched = TemperatureSchedule(2.0, 3.0, 1.0)
        s, u1, u2 = 0.3, 0.7, 1.1
        x0 = np.zeros(n_ck)
        v0 = np.full(n_ck, 0.8)
        xa, va = ou_step_arrays(rng, np.full(n_ck, s), np.full(n_ck, u1 + u2), x0, v0, sched, None)
        xm, vm = ou_step_arrays(rng, np.full(n_ck, s), np.full(n_ck, u1), x0, v0, sched, None)
        xb, vb = ou_step_arrays(rng, np.full(n_ck, s + u1), np.full(n_ck, u2), xm, vm, sched, None)
        p = min(stats.ks_2samp(xa, xb).pvalue, stats.ks_2samp(va, vb).pvalue,
                stats.ks_2samp(xa + va, xb + vb).pvalue)
        ok = worst < 1e-8 and p > 0.01
        return ok, f"max relative moment error {worst:.1e} over {n_draws} draws; CK two-sample p = {p:.3f}"
    return _run(6, "OU kernel exactness", 30, body)


# 7 -------------------------------------------------------------------------

BOUND_CHECKS = ("sandwich", "scaled_monotone", "variance_ratio", "small_u")


def asymptotic_bounds() -> CriterionResult:
    def body():
        rep = asymptotic_bounds_check(np.logspace(-3, 3, 200))
        failed = [k for k in BOUND_CHECKS if not rep.checks[k]]
        ok = not failed
        detail = (f"rho_hat(1e-6) = {rep.values['rho_hat_small_u']:.6f}, "
                  f"limit error {rep.values['limit_error']:.1e}")
        if failed:
            first = {k: rep.violations[k][0] for k in failed}
            detail += "; failed " + ", ".join(f"{k} (first at u={v:.3g})" for k, v in first.items())
        return ok, detail
    return _run(7, "asymptotic bounds", 1, body)


# 8 -------------------------------------------------------------------------

def event_probability(trials: int = 100_000) -> CriterionResult:
    def body():
        p = math.exp(-2)
        se = math.sqrt(p * (1 - p) / trials)
        rng = _rng(8)
        freqs = {eta: event_e_frequency(trials, 0.0, eta, rng) for eta in (0.3, 1.0, 7.0)}
        z = max(abs(f - p) / se for f in freqs.values())
        return z < 3, ", ".join(f"eta={e:g}: {f:.5f}" for e, f in freqs.items()) + f" (max {z:.2f} SE)"
    return _run(8, "event probability", 5, body)


# 9 -------------------------------------------------------------------------

def doeblin_machinery(n_pairs: int = 200, n_args: int = 2000, n_chains: int = 20_000) -> CriterionResult:
    def body():
        rng = _rng(9)
        sub_fail = 0
        for _ in range(n_pairs):
            rep = doeblin_submultiplicativity_check([FiniteKernel.random(rng, 5), FiniteKernel.random(rng, 5)])
            sub_fail += len(rep.failures)
        eta, T_inf, L = 1.0, 2.0, 1.0
        C = doeblin_lower_bound(eta, T_inf, L)
        sched = TemperatureSchedule.constant(T_inf, eta)
        worst = math.inf
        for _ in range(n_args):
            u = float(rng.uniform(1 / eta, 2 / eta))
            m = ou_moments(0.0, u, float(rng.uniform(-L / 2, L / 2)), float(rng.normal(0, 3)), sched)
            v = float(rng.normal(m.mu_v, m.sigma_v))
            x = float(rng.uniform(-L / 2, L / 2))
            worst = min(worst, float(wrapped_conditional_density(x, v, m, L)) * L / C)
        model = ModelConfig(TWO_BATHS, DomainSpec(L), "kfp", T0=T_inf)
        part = (np.linspace(-L / 2, L / 2, 9), np.linspace(-6, 6, 17))
        tv = coupled_tv_experiment(model, PhasePoint(-0.25, -3.0, L), PhasePoint(0.25, 3.0, L), 0.0, 10.0,
                                   part, n_chains, seed=ROOT_SEED)
        first_ok = tv.tv[0] <= tv.bound() + 3 * tv.se[0]
        ok = sub_fail == 0 and worst >= 1 and first_ok and tv.nonincreasing()
        return ok, (f"{sub_fail} sub-multiplicativity failures; min density*L/C = {worst:.3f}; "
                    f"TV(2/eta) = {tv.tv[0]:.3f} <= {tv.bound():.3f}; "
                    f"series {np.array2string(tv.tv, precision=3)}")
    return _run(9, "Doeblin machinery", 300, body)


# 10 ------------------------------------------------------------------------

def _cosine_positions(rng, n, L, amp=0.5):
    out = np.empty(0)
    while out.size < n:
        x = rng.uniform(-L / 2, L / 2, 2 * n)
        keep = rng.uniform(0, 1 + amp, x.size) < 1 + amp * np.cos(2 * np.pi * x / L)
        out = np.concatenate([out, x[keep]])
    return out[:n]


def spatial_flattening(n_particles: int = 100_000) -> CriterionResult:
    def body():
        model = ModelConfig(TWO_BATHS, DomainSpec(1.0), "kfp", T0=3.0)
        cfg = SolverConfig.for_model(model, 512, n_x=128, t_end=10.0)
        r = solve_spatial(cfg, model, perturbed_initial(cfg, model, 0.5), checkpoints=np.arange(1, 101) * 0.1)
        rng = _rng(10)
        x0 = _cosine_positions(rng, n_particles, 1.0)
        v0 = rng.standard_normal(n_particles) * math.sqrt(3.0)
        ens = Ensemble(x0, v0, model, rng)
        simulate_kfp(ens, 10.0)
        p = uniformity_chisquare(ens.x[:, 0], 1.0).pvalue
        ok = (r.l1_to_ness[-1] < 1e-2 and r.terminal_momentum < 1e-6
              and r.terminal_pressure_variation < 1e-4 and p > 0.01)
        return ok, (f"L1 = {r.l1_to_ness[-1]:.1e}, max|rho u| = {r.terminal_momentum:.1e}, "
                    f"rho T spread = {r.terminal_pressure_variation:.1e}, particle uniformity p = {p:.3f}")
    return _run(10, "spatial flattening", 600, body)


# 11 ------------------------------------------------------------------------

def entropy_decay() -> CriterionResult:
    def body():
        model = ModelConfig(ReservoirSet.from_pairs([(1.0, 2.0)]), DomainSpec(), "kfp", T0=3.0)
        r = solve_homogeneous(SolverConfig.for_model(model, 1024, t_end=10.0), model,
                              checkpoints=np.arange(1, 41) * 0.25)
        H = r.entropy
        ok = bool(np.all(np.diff(H) <= 0))
        return ok, f"H from {H[0]:.3e} to {H[-1]:.3e}, {int(np.sum(np.diff(H) > 0))} increases"
    return _run(11, "entropy decay", 30, body)


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: temperature_law,
    2: ness_stationarity,
    3: mixing_identities,
    4: homogeneous_convergence,
    5: bgk_ness,
    6: ou_exactness,
    7: asymptotic_bounds,
    8: event_probability,
    9: doeblin_machinery,
    10: spatial_flattening,
    11: entropy_decay,
}


def run_all(numbers=None) -> list[CriterionResult]:
    return [CRITERIA[k]() for k in (numbers or sorted(CRITERIA))]


def format_table(results: list[CriterionResult]) -> str:
    rows = [("#", "criterion", "result", "seconds", "detail")]
    rows += [(str(r.number), r.title, "PASS" if r.passed else "FAIL", f"{r.seconds:.1f}", r.detail) for r in results]
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    lines = []
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row[:4], widths)) + "  " + row[4])
    return "\n".join(lines)
