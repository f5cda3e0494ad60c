import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from thermokin.model import (DomainSpec, ModelConfig, PhasePoint, Reservoir, ReservoirSet, TemperatureSchedule,
                             equilibrium_parameters, maxwellian_density, temperature_at, temperature_rate,
                             wrap_position)

rates = st.floats(0.05, 20.0)
temps = st.floats(0.1, 50.0)
pairs = st.lists(st.tuples(rates, temps), min_size=1, max_size=6)


def test_reservoir_validation():
    with pytest.raises(ValueError):
        Reservoir(0.0, 1.0)
    with pytest.raises(ValueError):
        Reservoir(1.0, -1.0)
    with pytest.raises(ValueError):
        ReservoirSet(())


@pytest.mark.parametrize("pairs, expected", [
    ([(1, 1), (1, 3)], (2.0, 2.0)),
    ([(1, 5)], (1.0, 5.0)),
    ([(1, 1), (3, 2)], (4.0, 7 / 4)),
])
def test_equilibrium_parameters(pairs, expected):
    eta, T_inf = equilibrium_parameters(pairs)
    assert eta == pytest.approx(expected[0], abs=1e-15)
    assert T_inf == pytest.approx(expected[1], abs=1e-15)


def test_equilibrium_matches_ode_fixed_point():
    res = ReservoirSet.from_pairs([(1, 1), (3, 2)])
    sol = integrate.solve_ivp(lambda t, T: [temperature_rate(res, T[0])], (0, 40), [9.0], rtol=1e-12, atol=1e-12)
    assert sol.y[0, -1] == pytest.approx(res.T_inf, abs=1e-9)


@given(pairs)
def test_equilibrium_bounds_and_permutation(p):
    res = ReservoirSet.from_pairs(p)
    eta, T_inf = equilibrium_parameters(res)
    assert eta == pytest.approx(sum(e for e, _ in p))
    assert res.temps[0] <= T_inf <= res.temps[-1]
    assert np.all(np.diff(res.temps) >= 0)
    eta2, T2 = equilibrium_parameters(list(reversed(p)))
    assert (eta2, T2) == pytest.approx((eta, T_inf), rel=1e-14)


def test_temperature_at_examples():
    s = TemperatureSchedule(2.0, 3.0, 2.0)
    assert temperature_at(s, 0.0) == 3.0
    assert temperature_at(s, 1.0) == pytest.approx(2 + math.exp(-2), abs=1e-15)
    flat = TemperatureSchedule.constant(1.7, 3.0)
    assert np.all(flat(np.linspace(0, 10, 7)) == 1.7)
    with pytest.raises(ValueError):
        temperature_at(s, -1e-9)


def test_temperature_at_matches_ode_oracle():
    res = ReservoirSet.from_pairs([(1.5, 1.0), (0.5, 3.0)])
    sched = TemperatureSchedule.from_reservoirs(res, 3.0)
    ts = np.linspace(0, 5, 11)
    sol = integrate.solve_ivp(lambda t, T: [temperature_rate(res, T[0])], (0, 5), [3.0], t_eval=ts,
                              rtol=1e-12, atol=1e-13)
    assert np.allclose(sol.y[0], sched(ts), rtol=0, atol=1e-10)


@given(pairs, st.floats(0.1, 50.0))
def test_schedule_solves_temperature_ode(p, T0):
    res = ReservoirSet.from_pairs(p)
    sched = TemperatureSchedule.from_reservoirs(res, T0)
    t = np.linspace(0.01, 3.0 / res.eta, 25)
    h = 1e-5 / res.eta
    deriv = (sched(t + h) - sched(t - h)) / (2 * h)
    rhs = temperature_rate(res, sched(t))
    scale = max(abs(T0 - res.T_inf) * res.eta, 1e-12)
    assert np.max(np.abs(deriv - rhs)) <= 1e-6 * scale + 1e-9
    # monotone toward T_inf and positive
    vals = sched(np.linspace(0, 50, 200))
    assert np.all(vals > 0)
    assert np.all(np.diff(np.abs(vals - res.T_inf)) <= 1e-15)


def test_maxwellian_examples():
    assert maxwellian_density(0.0, 1.0) == pytest.approx(0.3989422804014327, abs=1e-15)
    T = 3.0
    mass, _ = integrate.quad(lambda v: maxwellian_density(v, T), -12 * math.sqrt(T), 12 * math.sqrt(T),
                             epsabs=1e-13, epsrel=1e-13, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-12)
    x, w = np.polynomial.hermite_e.hermegauss(40)
    # Gauss-Hermite oracle: E[v^2] under m_2 = 2 sum w (sqrt2 x)^2 / sqrt(2pi)
    assert np.sum(w * 2 * x ** 2) / math.sqrt(2 * math.pi) == pytest.approx(2.0, rel=1e-13)
    second, _ = integrate.quad(lambda v: v * v * maxwellian_density(v, 2.0), -40, 40)
    assert second == pytest.approx(2.0, rel=1e-10)
    with pytest.raises(ValueError):
        maxwellian_density(0.0, 0.0)


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=4), st.floats(0.1, 10))
def test_maxwellian_factorizes(v, T):
    v = np.array(v)
    prod = np.prod([maxwellian_density(c, T) for c in v])
    assert maxwellian_density(v, T, d=v.size) == pytest.approx(prod, rel=1e-12, abs=1e-300)


@given(st.floats(-1e6, 1e6), st.floats(0.01, 100))
def test_wrap_position_range(x, L):
    y = wrap_position(x, L)
    assert -L / 2 <= y < L / 2
    k = (x - y) / L
    assert abs(k - round(k)) < 1e-6 * max(1.0, abs(k))


def test_phase_point_wraps_and_is_immutable():
    p = PhasePoint([0.75, -1.25], [1.0, 2.0], L=1.0)
    assert np.allclose(p.x, [-0.25, -0.25])
    assert p.d == 2
    with pytest.raises(ValueError):
        p.x[0] = 0.0
    assert p == PhasePoint([-0.25, 0.75], [1.0, 2.0], 1.0)
    assert len({p, PhasePoint([-0.25, -0.25], [1.0, 2.0])}) == 1


def test_model_config_validation(two_baths):
    with pytest.raises(ValueError):
        ModelConfig(two_baths, kind="boltzmann")
    with pytest.raises(ValueError):
        ModelConfig(two_baths, kind="bgk", alpha=-1.0)
    with pytest.raises(ValueError):
        DomainSpec(L=0.0)
    m = ModelConfig(two_baths, DomainSpec(2.0, 1), "kfp", T0=3.0)
    assert m.schedule(0.0) == 3.0 and m.schedule.T_inf == 2.0
