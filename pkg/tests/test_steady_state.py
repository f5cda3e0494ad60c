import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from thermokin.diagnostics import ks_statistic
from thermokin.grids import VelocityGrid
from thermokin.model import ReservoirSet, maxwellian_density
from thermokin.steady_state import (GridError, MixingMeasure, NessDensity, QuadratureError, UnsupportedClosedForm,
                                    bgk_ness_density, fp_mixing_cdf, fp_mixing_density, fp_mixing_sample,
                                    fp_ness_cdf, fp_ness_density, pure_reservoir_ness, stationarity_residual)


def baths(e1, e2, T1=1.0, T2=3.0):
    return ReservoirSet.from_pairs([(e1, T1), (e2, T2)])


def oracle_integral(mm: MixingMeasure, f):
    """QUADPACK with algebraic endpoint weights; independent of the Gauss-Jacobi rule."""
    a = mm.exponent
    kw = dict(weight="alg", epsabs=1e-14, epsrel=1e-13, limit=200)
    left = integrate.quad(f, mm.T1, mm.T_inf, wvar=(0.0, a), **kw)[0]
    right = integrate.quad(f, mm.T_inf, mm.T2, wvar=(a, 0.0), **kw)[0]
    return mm.c1 * left + mm.c2 * right


def test_flat_mixing_density_at_unit_rates(two_baths):
    T = np.linspace(1.001, 2.999, 50)
    T = T[T != 2.0]
    assert np.allclose(fp_mixing_density(T, two_baths), 0.5, atol=1e-15)
    mm = MixingMeasure.from_reservoirs(two_baths)
    assert mm.c1 == mm.c2 == 0.5
    assert fp_mixing_density(2.0, two_baths) == 0.0
    assert fp_mixing_density(0.5, two_baths) == 0.0 and fp_mixing_density(3.5, two_baths) == 0.0


@pytest.mark.parametrize("eta", [0.5, 1.0, 2.0, 4.0])
def test_mixing_mass_and_mean(eta):
    mm = MixingMeasure.from_reservoirs(baths(eta / 2, eta / 2))
    assert oracle_integral(mm, lambda t: 1.0) == pytest.approx(1.0, abs=1e-10)
    assert oracle_integral(mm, lambda t: t) == pytest.approx(mm.T_inf, abs=1e-10)
    assert float(mm.expect(lambda t: np.ones_like(t))[0]) == pytest.approx(1.0, abs=1e-12)
    assert mm.mean() == pytest.approx(mm.T_inf, abs=1e-12)


def test_mixing_mean_asymmetric():
    res = baths(1.0, 3.0, 1.0, 2.0)
    mm = MixingMeasure.from_reservoirs(res)
    assert res.T_inf == 1.75
    assert oracle_integral(mm, lambda t: t) == pytest.approx(1.75, abs=1e-10)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.5, 7.9), st.floats(0.01, 7.5))
def test_mixing_normalized_property(e1, e2, T1, gap):
    T2 = min(T1 + gap, 8.0)
    if T2 - T1 < 1e-3:
        return
    mm = MixingMeasure.from_reservoirs(baths(e1, e2, T1, T2))
    mass = float(mm.expect(lambda t: np.ones_like(t), 96)[0])
    assert mass == pytest.approx(1.0, abs=1e-10)
    assert float(mm.expect(lambda t: t, 96)[0]) == pytest.approx(mm.T_inf, abs=1e-10 * T2)
    assert mm.cdf(T2) == 1.0 and mm.cdf(T1) == 0.0
    T = np.linspace(T1, T2, 101)
    assert np.all(np.diff(mm.cdf(T)) >= 0)
    assert np.all(mm.density(T) >= 0)


def test_cdf_is_antiderivative():
    mm = MixingMeasure.from_reservoirs(baths(0.7, 2.1, 1.0, 4.0))
    for t in (1.3, 2.0, 3.2, 3.9):
        a = mm.exponent
        if t < mm.T_inf:
            val = mm.c1 * integrate.quad(lambda s: (mm.T_inf - s) ** a, mm.T1, t)[0]
        else:
            val = mm.p1 + mm.c2 * integrate.quad(lambda s: (s - mm.T_inf) ** a, mm.T_inf, t)[0]
        assert mm.cdf(t) == pytest.approx(val, abs=1e-10)


def test_sampler_matches_cdf(two_baths):
    rng = np.random.default_rng(1)
    T = fp_mixing_sample(rng, two_baths, 10 ** 6)
    assert np.all((T >= 1) & (T <= 3))
    assert ks_statistic(T, lambda t: fp_mixing_cdf(t, two_baths)).passed


@pytest.mark.parametrize("eta", [0.3, 3.0])
def test_sampler_matches_cdf_asymmetric(eta):
    res = baths(0.25 * eta, 0.75 * eta, 0.5, 6.0)
    T = fp_mixing_sample(np.random.default_rng(2), res, 10 ** 5)
    assert ks_statistic(T, lambda t: fp_mixing_cdf(t, res)).passed


def test_sampler_limits():
    rng = np.random.default_rng(3)
    big = baths(1500.0, 4500.0)
    T = fp_mixing_sample(rng, big, 10 ** 5)
    frac = np.mean(np.abs(T - 1.0) < 0.01)
    # exact mass within 0.01 of T_1 is p_1 (1 - (1 - 0.01/(T_inf - T_1))^(eta/2))
    mm = MixingMeasure.from_reservoirs(big)
    exact = mm.p1 * (1 - (1 - 0.01 / (mm.T_inf - 1.0)) ** (mm.eta / 2))
    assert abs(frac - exact) < 4 * math.sqrt(exact * (1 - exact) / T.size)
    assert abs(frac - 0.25) < 0.02
    small = baths(0.005, 0.005)
    T = fp_mixing_sample(rng, small, 10 ** 5)
    assert np.mean(np.abs(T - 2.0) < 0.01) > 0.95


def test_unsupported_and_degenerate():
    with pytest.raises(UnsupportedClosedForm):
        MixingMeasure.from_reservoirs(ReservoirSet.from_pairs([(1, 1), (1, 2), (1, 3)]))
    with pytest.raises(ValueError):
        MixingMeasure.from_reservoirs(baths(1, 1, 2.0, 2.0))
    with pytest.raises(UnsupportedClosedForm):
        fp_ness_density(0.0, ReservoirSet.from_pairs([(1, 2)]))


def test_fp_ness_even_normalized_and_second_moment(two_baths):
    v = np.linspace(0.0, 12.0, 97)
    assert np.max(np.abs(fp_ness_density(v, two_baths) - fp_ness_density(-v, two_baths))) <= 1e-14
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
    mass = integrate.quad(lambda x: fp_ness_density(x, two_baths), -30, 30, points=[0.0], **opts)[0]
    m2 = integrate.quad(lambda x: x * x * fp_ness_density(x, two_baths), -40, 40, points=[0.0], **opts)[0]
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert m2 == pytest.approx(2.0, abs=1e-8)
    assert NessDensity("fp", two_baths).second_moment() == pytest.approx(2.0, abs=1e-12)


def test_fp_ness_matches_nested_quadrature():
    res = baths(0.4, 0.8, 1.0, 3.0)
    mm = MixingMeasure.from_reservoirs(res)
    for v in (0.0, 0.7, 2.5, 6.0):
        ref = oracle_integral(mm, lambda t: maxwellian_density(v, t))
        assert fp_ness_density(v, res) == pytest.approx(ref, rel=1e-10)
        ref_cdf = oracle_integral(mm, lambda t: 0.5 * math.erfc(-v / math.sqrt(2 * t)))
        assert fp_ness_cdf(v, res) == pytest.approx(ref_cdf, rel=1e-10)


def test_fp_ness_in_two_dimensions(two_baths):
    v = np.array([[0.3, -1.2], [2.0, 0.5]])
    mm = MixingMeasure.from_reservoirs(two_baths)
    for row, val in zip(v, fp_ness_density(v, two_baths, d=2)):
        ref = oracle_integral(mm, lambda t: maxwellian_density(row, t, 2))
        assert val == pytest.approx(ref, rel=1e-10)


def test_quadrature_failure_reports_achieved():
    with pytest.raises(QuadratureError) as err:
        fp_ness_density(0.0, baths(0.01, 0.01), tol=1e-30)
    assert err.value.achieved >= 0


def test_bgk_examples(two_baths):
    v = np.linspace(-8, 8, 41)
    single = ReservoirSet.from_pairs([(2.0, 1.5)])
    for alpha in (0.1, 1.0, 7.0):
        assert np.allclose(bgk_ness_density(v, single, alpha), maxwellian_density(v, 1.5), atol=1e-16)
    expected = (maxwellian_density(v, 2) + maxwellian_density(v, 1) + maxwellian_density(v, 3)) / 3
    assert np.allclose(bgk_ness_density(v, two_baths, 1.0), expected, atol=1e-16)
    other = ReservoirSet.from_pairs([(2, 1), (5, 4)])
    mass = integrate.quad(lambda x: bgk_ness_density(x, other, 0.7), -np.inf, np.inf, epsabs=1e-14)[0]
    assert mass == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        bgk_ness_density(v, two_baths, 0.0)


def test_pure_reservoir_examples(two_baths):
    v = np.linspace(-8, 8, 41)
    single = ReservoirSet.from_pairs([(2.0, 1.5)])
    assert np.allclose(pure_reservoir_ness(v, single), maxwellian_density(v, 1.5))
    assert np.allclose(pure_reservoir_ness(v, two_baths), 0.5 * (maxwellian_density(v, 1) + maxwellian_density(v, 3)))
    res = ReservoirSet.from_pairs([(1, 1), (2, 2.5), (0.5, 4)])
    m2 = integrate.quad(lambda x: x * x * pure_reservoir_ness(x, res), -np.inf, np.inf, epsabs=1e-13)[0]
    assert m2 == pytest.approx(res.T_inf, abs=1e-10)


@given(st.floats(-15, 15), st.floats(0.05, 5), st.lists(st.tuples(st.floats(0.1, 5), st.floats(0.3, 6)),
                                                        min_size=1, max_size=4))
def test_finite_mixtures_are_convex(v, alpha, pairs):
    res = ReservoirSet.from_pairs(pairs)
    comps = [maxwellian_density(v, T) for T in [*res.temps, res.T_inf]]
    lo, hi = min(comps), max(comps)
    for val in (bgk_ness_density(v, res, alpha), pure_reservoir_ness(v, res)):
        assert lo * (1 - 1e-12) <= val <= hi * (1 + 1e-12)


def test_stationarity_residual_examples(two_baths):
    vmax = 10 * math.sqrt(3)
    grid = VelocityGrid(vmax, 2048)
    fp = stationarity_residual(grid.with_values(fp_ness_density(grid.v, two_baths)), two_baths)
    assert fp < 1e-4
    bgk = stationarity_residual(grid.with_values(bgk_ness_density(grid.v, two_baths, 1.0)), two_baths, "bgk", 1.0)
    assert bgk < 1e-6
    wrong = stationarity_residual(grid.maxwellian(2.0), two_baths)
    assert wrong > 0.01


def test_stationarity_residual_second_order(two_baths):
    r = []
    for n in (512, 1024, 2048, 4096):
        g = VelocityGrid(10 * math.sqrt(3), n)
        r.append(stationarity_residual(g.with_values(fp_ness_density(g.v, two_baths)), two_baths))
    ratios = np.array(r[:-1]) / np.array(r[1:])
    assert np.all(np.abs(ratios - 4) < 0.5)


def test_stationarity_residual_rejects_short_grid(two_baths):
    g = VelocityGrid(5.0, 512)
    with pytest.raises(GridError):
        stationarity_residual(g.with_values(fp_ness_density(g.v, two_baths)), two_baths)
    g = VelocityGrid(10 * math.sqrt(3), 512)
    with pytest.raises(GridError):
        stationarity_residual(g.with_values(np.ones(512)), two_baths)


@pytest.mark.parametrize("kind", ["fp", "bgk", "pure"])
def test_ness_density_sampler(kind, two_baths):
    ness = NessDensity(kind, two_baths, 1.0)
    x = ness.sample(np.random.default_rng(5), 50_000)
    assert x.shape == (50_000, 1)
    assert ks_statistic(x[:, 0], ness.cdf).passed
    assert np.mean(x ** 2) == pytest.approx(ness.second_moment(), rel=0.03)
    assert NessDensity(kind, two_baths, 1.0, d=3).sample(np.random.default_rng(0), 10).shape == (10, 3)
