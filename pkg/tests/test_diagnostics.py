import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from thermokin.diagnostics import (FiniteKernel, Histogram, doeblin_coefficient, doeblin_submultiplicativity_check,
                                   hydrodynamic_moments, ks_statistic, l1_distance, relative_entropy,
                                   tv_histogram, uniformity_chisquare)
from thermokin.grids import PhaseGrid, VelocityGrid
from thermokin.model import DomainSpec, ReservoirSet, maxwellian_density
from thermokin.steady_state import NessDensity

FINE = VelocityGrid(30.0, 6001)


def test_l1_examples():
    a = FINE.maxwellian(1.0)
    assert l1_distance(a, a) == 0.0
    # |m_1 - m_3| has kinks, so the trapezoid rule needs a fine mesh here
    fine = VelocityGrid(30.0, 120_001)
    a, b = fine.maxwellian(1.0), fine.maxwellian(3.0)
    oracle = integrate.quad(lambda v: abs(maxwellian_density(v, 1) - maxwellian_density(v, 3)), -30, 30,
                            points=[-math.sqrt(1.5 * math.log(3)), math.sqrt(1.5 * math.log(3))],
                            epsabs=1e-13, limit=200)[0]
    assert l1_distance(a, b) == pytest.approx(oracle, abs=1e-8)
    assert l1_distance(a, b) == l1_distance(b, a)
    left = np.where(FINE.v < -1, 1.0, 0.0)
    right = np.where(FINE.v > 1, 1.0, 0.0)
    left /= np.trapezoid(left, dx=FINE.dv)
    right /= np.trapezoid(right, dx=FINE.dv)
    assert l1_distance(FINE.with_values(left), FINE.with_values(right)) == pytest.approx(2.0, abs=1e-14)


def test_grid_mismatch_rejected():
    with pytest.raises(ValueError):
        l1_distance(FINE.maxwellian(1.0), VelocityGrid(30.0, 6000).maxwellian(1.0))
    with pytest.raises(TypeError):
        l1_distance(FINE.maxwellian(1.0), np.zeros(6001))


def test_relative_entropy_examples():
    a, b = FINE.maxwellian(1.0), FINE.maxwellian(3.0)
    assert relative_entropy(a, a) == 0.0
    assert relative_entropy(a, b) == pytest.approx(0.5 * (1 / 3 - 1 + math.log(3)), abs=1e-6)
    oracle = integrate.quad(lambda v: maxwellian_density(v, 1) * math.log(maxwellian_density(v, 1) / maxwellian_density(v, 3)),
                            -30, 30, epsabs=1e-13, limit=200)[0]
    assert relative_entropy(a, b) == pytest.approx(oracle, abs=1e-9)
    g = b.values.copy()
    g[3000] = 0.0
    assert relative_entropy(a, FINE.with_values(g)) == math.inf


@given(st.floats(0.3, 5), st.floats(0.3, 5), st.floats(-2, 2))
def test_pinsker_and_symmetry(T1, T2, shift):
    grid = VelocityGrid(40.0, 4001)
    f = grid.with_values(maxwellian_density(grid.v - shift, T1))
    g = grid.maxwellian(T2)
    l1 = l1_distance(f, g)
    assert 0 <= l1 <= 2
    assert l1 == pytest.approx(l1_distance(g, f), abs=1e-15)
    assert relative_entropy(f, g) >= 0.5 * l1 ** 2 / 2 - 1e-10


def test_hydrodynamic_moments():
    grid = PhaseGrid(DomainSpec(2.0), VelocityGrid(20.0, 801), 16)
    f = np.tile(maxwellian_density(grid.v, 1.7) / 2.0, (16, 1))
    h = hydrodynamic_moments(grid.with_values(f))
    assert np.allclose(h.rho, 0.5, atol=1e-13)
    assert np.allclose(h.u, 0.0, atol=1e-13)
    assert np.allclose(h.T, 1.7, atol=1e-12)
    rho0 = np.linspace(0.1, 0.9, 16)
    u0 = np.linspace(-1, 1, 16)
    f = rho0[:, None] * maxwellian_density(grid.v[None, :] - u0[:, None], 2.5)
    h = hydrodynamic_moments(grid.with_values(f))
    assert np.allclose(h.rho, rho0, rtol=1e-12)
    assert np.allclose(h.u, u0, atol=1e-12)
    assert np.allclose(h.T, 2.5, rtol=1e-11)
    f[3] = 0.0
    h = hydrodynamic_moments(grid.with_values(f))
    assert np.isnan(h.u[3]) and np.isnan(h.T[3]) and h.momentum[3] == 0


def test_histogram_invariants():
    h = Histogram.from_samples(np.array([-5.0, 0.1, 0.2, 9.0]), (np.linspace(-1, 1, 5),))
    assert h.total == 4 and h.overflow == 2 and h.counts.shape == (6,)
    assert np.isclose(h.probabilities().sum(), 1.0)
    with pytest.raises(ValueError):
        Histogram((np.array([0.0, 0.0, 1.0]),), np.zeros(4))
    with pytest.raises(ValueError):
        Histogram((np.array([0.0, 1.0]),), np.array([1, -1, 0]))
    h2 = Histogram.from_samples(np.zeros((3, 2)), (np.linspace(-1, 1, 3), np.linspace(-1, 1, 4)))
    assert h2.counts.shape == (4, 5) and h2.total == 3


def test_tv_histogram_examples():
    rng = np.random.default_rng(0)
    edges = (np.linspace(-4, 4, 11),)
    x = rng.normal(size=100_000)
    h = Histogram.from_samples(x, edges)
    assert tv_histogram(h, h)[0] == 0.0
    y = rng.normal(size=100_000)
    tv, se = tv_histogram(h, Histogram.from_samples(y, edges), rng=rng)
    assert tv < 3 * se
    with pytest.raises(ValueError):
        tv_histogram(h, Histogram.from_samples(y, (np.linspace(-4, 4, 12),)))


def test_tv_histogram_gaussians_against_crossings():
    rng = np.random.default_rng(1)
    c = math.sqrt(1.5 * math.log(3))  # where m_1 and m_3 cross
    exact = 2 * (stats.norm.cdf(c) - stats.norm.cdf(c, scale=math.sqrt(3)))
    edges = (np.array([-c, c]),)  # sign of m_1 - m_3 is constant on every cell
    n = 100_000
    h1 = Histogram.from_samples(rng.normal(size=n), edges)
    h3 = Histogram.from_samples(rng.normal(scale=math.sqrt(3), size=n), edges)
    tv, se = tv_histogram(h1, h3, rng=rng)
    assert abs(tv - exact) < 3 * se
    fine = (np.linspace(-8, 8, 161),)
    tvf, _ = tv_histogram(Histogram.from_samples(rng.normal(size=n), fine),
                          Histogram.from_samples(rng.normal(scale=math.sqrt(3), size=n), fine), n_boot=0)
    # coarse-graining cannot exceed the density-level TV beyond sampling bias
    assert tvf <= 0.5 * l1_distance(FINE.maxwellian(1.0), FINE.maxwellian(3.0)) + 0.02


def test_ks_calibration():
    rng = np.random.default_rng(2)
    passes = sum(ks_statistic(rng.normal(size=1000), stats.norm.cdf).passed for _ in range(200))
    # binomial(200, 0.99): P(passes < 193) is below 1e-3
    assert passes >= 193
    bad = ks_statistic(rng.normal(size=10_000), stats.norm(scale=math.sqrt(3)).cdf)
    assert not bad.passed
    with pytest.raises(ValueError):
        ks_statistic(rng.normal(size=500), lambda x: -stats.norm.cdf(x))
    with pytest.raises(ValueError):
        ks_statistic(np.zeros(50), stats.norm.cdf)


def test_ks_statistic_matches_scipy():
    x = np.random.default_rng(3).normal(size=2000)
    assert ks_statistic(x, stats.norm.cdf).D == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-15)


def test_ks_fp_ness_sampler():
    res = ReservoirSet.from_pairs([(1, 1), (1, 3)])
    ness = NessDensity("fp", res)
    assert ks_statistic(ness.sample(np.random.default_rng(4), 100_000)[:, 0], ness.cdf).passed


def test_uniformity_chisquare():
    rng = np.random.default_rng(5)
    assert uniformity_chisquare(rng.uniform(-1, 1, 100_000), 2.0).pvalue > 0.001
    assert uniformity_chisquare(rng.normal(0, 0.3, 100_000), 2.0).pvalue < 1e-6


def test_finite_kernel_validation():
    with pytest.raises(ValueError):
        FiniteKernel(np.array([[0.5, 0.6], [0.5, 0.5]]))
    with pytest.raises(ValueError):
        FiniteKernel(np.ones((2, 3)) / 3)
    with pytest.raises(ValueError):
        FiniteKernel(np.array([[1.5, -0.5], [0.5, 0.5]]))


def test_doeblin_special_kernels():
    rng = np.random.default_rng(6)
    flat = FiniteKernel(np.tile(rng.dirichlet(np.ones(4)), (4, 1)))
    other = FiniteKernel.random(rng, 4)
    assert doeblin_coefficient(flat) == 0.0
    assert doeblin_coefficient(other @ flat) == pytest.approx(0.0, abs=1e-15)
    assert doeblin_coefficient(flat @ other) == pytest.approx(0.0, abs=1e-15)
    eye = FiniteKernel(np.eye(4))
    assert doeblin_coefficient(eye) == 1.0
    rep = doeblin_submultiplicativity_check([eye, eye])
    assert rep.passed and rep.coefficients == [1.0, 1.0]


def test_submultiplicativity_random_pairs():
    rng = np.random.default_rng(7)
    for _ in range(200):
        rep = doeblin_submultiplicativity_check([FiniteKernel.random(rng, 5), FiniteKernel.random(rng, 5)])
        assert rep.passed and rep.checked == 1


def test_submultiplicativity_all_bracketings():
    rng = np.random.default_rng(8)
    ks = [FiniteKernel.random(rng, 4, 0.5) for _ in range(5)]
    rep = doeblin_submultiplicativity_check(ks)
    assert rep.passed
    assert rep.checked == sum(j - i for i in range(5) for j in range(i + 1, 5))


def test_two_state_lattice_against_exhaustive_oracle():
    lattice = np.round(np.arange(0, 21) * 0.05, 10)
    kernels = [(a, c) for a in lattice for c in lattice]  # rows (a, 1-a), (c, 1-c)
    # independent closed form for two states: rho = |a - c|
    for a, c in kernels:
        assert doeblin_coefficient(FiniteKernel(np.array([[a, 1 - a], [c, 1 - c]]))) == pytest.approx(abs(a - c), abs=1e-15)
    A = np.array(kernels)
    ra = np.abs(A[:, 0] - A[:, 1])
    # product of [[a,1-a],[c,1-c]] and [[b,1-b],[d,1-d]] has first column a b + (1-a) d, c b + (1-c) d
    pa, pc = A[:, None, 0], A[:, None, 1]
    pb, pd = A[None, :, 0], A[None, :, 1]
    rho_ab = np.abs((pa * pb + (1 - pa) * pd) - (pc * pb + (1 - pc) * pd))
    oracle_ok = rho_ab <= ra[:, None] * ra[None, :] + 1e-12
    assert oracle_ok.all()
    rng = np.random.default_rng(9)
    for i, j in rng.integers(0, len(kernels), size=(2000, 2)):
        (a, c), (b, d) = kernels[i], kernels[j]
        rep = doeblin_submultiplicativity_check([FiniteKernel(np.array([[a, 1 - a], [c, 1 - c]])),
                                                 FiniteKernel(np.array([[b, 1 - b], [d, 1 - d]]))])
        assert rep.passed == bool(oracle_ok[i, j])
