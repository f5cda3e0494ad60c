"""Closed-form spatially uniform steady states.

Three velocity densities are provided:

* the kinetic Fokker-Planck steady state for two reservoirs, a Gaussian scale
  mixture ``g(v) = int w(T) m_T(v) dT`` whose mixing density ``w`` is a pair of
  power laws meeting at ``T_inf``;
* the BGK steady state, a finite mixture of ``m_{T_inf}`` and the reservoir
  Maxwellians;
* the reservoir-only steady state, the finite mixture of reservoir Maxwellians.

The mixing density is singular at ``T_inf`` when ``eta < 2``. Integrals against
it are done with Gauss-Jacobi rules carrying the exact power-law weight, so the
accuracy does not degrade as ``eta`` varies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy import special

from .grids import VelocityGrid, fp_rate
from .model import ReservoirSet, maxwellian_density


class UnsupportedClosedForm(ValueError):
    """No closed-form steady state exists for these parameters; use the grid solver."""


class QuadratureError(RuntimeError):
    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved {achieved:.3e})")
        self.achieved = achieved


class GridError(ValueError):
    """A velocity grid is too short or too coarse for the requested check."""


NessKind = Literal["fp", "bgk", "pure"]


@dataclass(frozen=True)
class MixingMeasure:
    """Probability density on ``[T_1, T_2]`` mixing Maxwellians into the FP steady state.

    ``w(T) = c_1 (T_inf - T)^a`` left of ``T_inf`` and ``c_2 (T - T_inf)^a`` right of
    it, with ``a = eta/2 - 1``. The value at ``T_inf`` is taken to be 0.
    """

    T1: float
    T2: float
    T_inf: float
    eta1: float
    eta2: float
    # point masses at T_inf would enter here for k > 2 reservoirs with some
    # T_j == T_inf; no closed form is available for that case yet
    atoms: tuple[tuple[float, float], ...] = ()

    @classmethod
    def from_reservoirs(cls, reservoirs: ReservoirSet) -> "MixingMeasure":
        if reservoirs.k != 2:
            raise UnsupportedClosedForm(
                f"closed-form mixing density needs exactly two reservoirs, got {reservoirs.k}"
            )
        (r1, r2) = reservoirs.reservoirs
        if not r1.T < r2.T:
            raise ValueError("the two reservoir temperatures must differ")
        return cls(r1.T, r2.T, reservoirs.T_inf, r1.eta, r2.eta)

    @property
    def eta(self) -> float:
        return self.eta1 + self.eta2

    @property
    def exponent(self) -> float:
        return 0.5 * self.eta - 1.0

    @property
    def p1(self) -> float:
        return self.eta1 / self.eta

    @property
    def p2(self) -> float:
        return self.eta2 / self.eta

    @property
    def c1(self) -> float:
        return self.eta1 / (2.0 * (self.T_inf - self.T1) ** (0.5 * self.eta))

    @property
    def c2(self) -> float:
        return self.eta2 / (2.0 * (self.T2 - self.T_inf) ** (0.5 * self.eta))

    def density(self, T):
        T = np.asarray(T, dtype=float)
        a = self.exponent
        out = np.zeros_like(T)
        left = (T >= self.T1) & (T < self.T_inf)
        right = (T > self.T_inf) & (T <= self.T2)
        out[left] = self.c1 * (self.T_inf - T[left]) ** a
        out[right] = self.c2 * (T[right] - self.T_inf) ** a
        return float(out) if out.ndim == 0 else out

    def cdf(self, T):
        T = np.asarray(T, dtype=float)
        h = 0.5 * self.eta
        dl = self.T_inf - self.T1
        dr = self.T2 - self.T_inf
        left = self.p1 * (1.0 - (np.clip(self.T_inf - T, 0.0, dl) / dl) ** h)
        right = self.p1 + self.p2 * (np.clip(T - self.T_inf, 0.0, dr) / dr) ** h
        out = np.where(T < self.T_inf, left, right)
        out = np.where(T < self.T1, 0.0, np.where(T >= self.T2, 1.0, out))
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-CDF draw: ``T_inf -/+ (distance to end) * U^(2/eta)``."""
        side = rng.random(size) < self.p1
        U = rng.random(size)
        r = U ** (2.0 / self.eta)
        out = np.where(side, self.T_inf - (self.T_inf - self.T1) * r, self.T_inf + (self.T2 - self.T_inf) * r)
        return float(out) if np.ndim(out) == 0 else out

    def mean(self) -> float:
        # E[U^(2/eta)] = eta / (eta + 2)
        m = self.eta / (self.eta + 2.0)
        return self.T_inf + m * (self.p2 * (self.T2 - self.T_inf) - self.p1 * (self.T_inf - self.T1))

    def total_mass(self) -> float:
        return float(self.cdf(self.T2))

    def expect(self, func, n_nodes: int = 64):
        """``int w(T) func(T) dT`` with a Gauss-Jacobi rule per branch.

        ``func`` maps an array of temperatures with shape ``(n_nodes, 1)`` to an
        array broadcastable against it; the node axis is summed out.
        """
        y, wts = _jacobi_unit(n_nodes, self.exponent)
        tl = (self.T_inf - (self.T_inf - self.T1) * y)[:, None]
        tr = (self.T_inf + (self.T2 - self.T_inf) * y)[:, None]
        wts = wts[:, None]
        # after mapping each branch to y in [0, 1]: (eta_j / 2) int_0^1 y^a f dy
        return 0.5 * self.eta1 * np.sum(wts * func(tl), axis=0) + 0.5 * self.eta2 * np.sum(wts * func(tr), axis=0)


@lru_cache(maxsize=64)
def _jacobi_unit(n: int, beta: float):
    """Nodes and weights for ``int_0^1 y^beta f(y) dy``."""
    x, w = special.roots_jacobi(n, 0.0, beta)
    y = 0.5 * (1.0 + x)
    w = w * 2.0 ** (-beta - 1.0)
    y.flags.writeable = False
    w.flags.writeable = False
    return y, w


def fp_mixing_density(T, reservoirs: ReservoirSet):
    """Mixing density ``w(T)`` of the FP steady state (two reservoirs only)."""
    return MixingMeasure.from_reservoirs(reservoirs).density(T)


def fp_mixing_cdf(T, reservoirs: ReservoirSet):
    return MixingMeasure.from_reservoirs(reservoirs).cdf(T)


def fp_mixing_sample(rng: np.random.Generator, reservoirs: ReservoirSet, size=None):
    """Draw temperatures distributed by the mixing density."""
    return MixingMeasure.from_reservoirs(reservoirs).sample(rng, size)


def _mixture_quad(measure: MixingMeasure, func, tol: float, n_nodes: int = 64):
    """Evaluate ``measure.expect(func)`` with an embedded error estimate."""
    coarse = measure.expect(func, n_nodes)
    fine = measure.expect(func, n_nodes + n_nodes // 2)
    err = float(np.max(np.abs(fine - coarse))) if np.size(fine) else 0.0
    scale = max(float(np.max(np.abs(fine))) if np.size(fine) else 0.0, 1e-300)
    if err > tol * max(scale, 1.0):
        raise QuadratureError("mixture quadrature did not converge", err)
    return fine


def _sq_norm(v, d: int):
    v = np.asarray(v, dtype=float)
    if d == 1:
        return v * v
    if v.shape[-1] != d:
        raise ValueError(f"last axis must have length d={d}")
    return np.sum(v * v, axis=-1)


def fp_ness_density(v, reservoirs: ReservoirSet, d: int = 1, tol: float = 1e-12):
    """Kinetic Fokker-Planck steady state ``int w(T) m_T(v) dT``."""
    measure = MixingMeasure.from_reservoirs(reservoirs)
    sq = np.asarray(_sq_norm(v, d))
    flat = sq.ravel()[None, :]

    def integrand(T):
        return np.exp(-0.5 * flat / T) * (2.0 * math.pi * T) ** (-0.5 * d)

    out = _mixture_quad(measure, integrand, tol).reshape(sq.shape)
    return float(out) if out.ndim == 0 else out


def fp_ness_cdf(v, reservoirs: ReservoirSet, tol: float = 1e-12):
    """CDF of the one-dimensional FP steady state, ``int w(T) Phi(v / sqrt(T)) dT``."""
    measure = MixingMeasure.from_reservoirs(reservoirs)
    v = np.asarray(v, dtype=float)
    flat = v.ravel()[None, :]
    out = _mixture_quad(measure, lambda T: special.ndtr(flat / np.sqrt(T)), tol).reshape(v.shape)
    return float(out) if out.ndim == 0 else out


def _finite_mixture(v, temps, weights, d: int):
    out = sum(w * maxwellian_density(v, T, d) for w, T in zip(weights, temps))
    return out


def bgk_ness_density(v, reservoirs: ReservoirSet, alpha: float, d: int = 1):
    """BGK steady state ``(alpha m_{T_inf} + sum_j eta_j m_{T_j}) / (alpha + eta)``."""
    if not alpha > 0:
        raise ValueError(f"BGK rate must be positive, got {alpha}")
    temps = [reservoirs.T_inf, *reservoirs.temps]
    weights = np.array([alpha, *reservoirs.etas]) / (alpha + reservoirs.eta)
    return _finite_mixture(v, temps, weights, d)


def pure_reservoir_ness(v, reservoirs: ReservoirSet, d: int = 1):
    """Steady state without a collision term: ``sum_j eta_j m_{T_j} / eta``."""
    return _finite_mixture(v, reservoirs.temps, reservoirs.weights, d)


def _finite_mixture_cdf(v, temps, weights):
    v = np.asarray(v, dtype=float)
    out = sum(w * special.ndtr(v / math.sqrt(T)) for w, T in zip(weights, temps))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class NessDensity:
    """A steady-state velocity density of one of the three kinds."""

    kind: NessKind
    reservoirs: ReservoirSet
    alpha: float = 1.0
    d: int = 1

    def __post_init__(self):
        if self.kind not in ("fp", "bgk", "pure"):
            raise ValueError(f"unknown steady-state kind {self.kind!r}")
        if self.kind == "fp":
            MixingMeasure.from_reservoirs(self.reservoirs)
        if self.kind == "bgk" and not self.alpha > 0:
            raise ValueError("BGK rate must be positive")

    def _components(self):
        r = self.reservoirs
        if self.kind == "bgk":
            return [r.T_inf, *r.temps], np.array([self.alpha, *r.etas]) / (self.alpha + r.eta)
        return list(r.temps), r.weights

    def __call__(self, v):
        if self.kind == "fp":
            return fp_ness_density(v, self.reservoirs, self.d)
        temps, weights = self._components()
        return _finite_mixture(v, temps, weights, self.d)

    def cdf(self, v):
        """One-dimensional marginal CDF of a single velocity coordinate."""
        if self.kind == "fp":
            return fp_ness_cdf(v, self.reservoirs)
        return _finite_mixture_cdf(v, *self._components())

    def second_moment(self) -> float:
        """Per-coordinate second moment."""
        if self.kind == "fp":
            return MixingMeasure.from_reservoirs(self.reservoirs).mean()
        temps, weights = self._components()
        return float(np.dot(weights, temps))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` velocities of shape ``(n, d)``: draw a temperature, then a Gaussian."""
        if self.kind == "fp":
            T = MixingMeasure.from_reservoirs(self.reservoirs).sample(rng, n)
        else:
            temps, weights = self._components()
            T = np.asarray(temps)[rng.choice(len(temps), size=n, p=weights)]
        return rng.standard_normal((n, self.d)) * np.sqrt(T)[:, None]


def stationarity_residual(density: VelocityGrid, reservoirs: ReservoirSet, kind: NessKind = "fp",
                          alpha: float = 1.0) -> float:
    """L1 norm of the discretized stationary operator applied to a gridded density.

    For ``kind='fp'`` the operator is ``G_{T_inf} g + sum_j eta_j m_{T_j} - eta g``
    with the exponentially fitted ``G``; for ``'bgk'`` it is the algebraic balance
    ``alpha m_{T_inf} + sum_j eta_j m_{T_j} - (alpha + eta) g`` (``'pure'`` is
    ``alpha = 0``).
    """
    if density.values is None:
        raise ValueError("grid carries no density values")
    g = density.values
    T_top = float(np.max(reservoirs.temps))
    if density.v_max < 10.0 * math.sqrt(T_top) * (1 - 1e-12):
        raise GridError(f"grid half-width {density.v_max:.3g} is below 10 sqrt(T_k) = {10 * math.sqrt(T_top):.3g}")
    edge = max(abs(g[0]), abs(g[-1]))
    if edge > 1e-12:
        raise GridError(f"density at the grid boundary is {edge:.3e} > 1e-12")
    v = density.v
    source = sum(e * maxwellian_density(v, T) for e, T in zip(reservoirs.etas, reservoirs.temps))
    eta = reservoirs.eta
    if kind == "fp":
        r = fp_rate(g, v, density.dv, reservoirs.T_inf) + source - eta * g
    elif kind in ("bgk", "pure"):
        a = alpha if kind == "bgk" else 0.0
        r = a * maxwellian_density(v, reservoirs.T_inf) + source - (a + eta) * g
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return float(np.trapezoid(np.abs(r), dx=density.dv))
