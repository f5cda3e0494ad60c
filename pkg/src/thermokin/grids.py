"""Uniform velocity and phase-space grids and the exponentially fitted
Fokker-Planck operator on them.

The drift-diffusion flux ``J = T g' + v g`` is discretized with the
Scharfetter-Gummel (Chang-Cooper type) exponential fit

    J_{i+1/2} = (T / dv) [B(-w) g_{i+1} - B(w) g_i],   w = v_{i+1/2} dv / T,

with ``B(w) = w / (exp(w) - 1)``. Since ``v_{i+1}^2 - v_i^2 = 2 v_{i+1/2} dv``,
the flux vanishes exactly on the sampled Maxwellian ``m_T(v_i)``, so the
discrete kernel of the operator is the discrete Maxwellian. Zero flux is
imposed at both ends, which makes the discrete mass change telescope to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .model import DomainSpec, maxwellian_density


def bernoulli(w):
    """``B(w) = w / expm1(w)`` with the removable point ``B(0) = 1``."""
    w = np.asarray(w, dtype=float)
    small = np.abs(w) < 1e-10
    safe = np.where(small, 1.0, w)
    out = np.where(small, 1.0 - 0.5 * w, safe / np.expm1(safe))
    return out


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform nodes on ``[-v_max, v_max]`` with density values per node."""

    v_max: float
    n: int
    values: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.v_max > 0 or self.n < 3:
            raise ValueError("need v_max > 0 and at least 3 nodes")
        if self.values is not None:
            vals = np.asarray(self.values, dtype=float)
            if vals.shape[-1] != self.n:
                raise ValueError("values do not match the node count")
            object.__setattr__(self, "values", vals)

    @classmethod
    def for_temperature(cls, T_max: float, n: int = 1024, width: float = 10.0) -> "VelocityGrid":
        """Grid covering ``width`` thermal speeds of the hottest temperature."""
        return cls(width * math.sqrt(T_max), n)

    @property
    def v(self) -> np.ndarray:
        return np.linspace(-self.v_max, self.v_max, self.n)

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / (self.n - 1)

    def with_values(self, values) -> "VelocityGrid":
        return VelocityGrid(self.v_max, self.n, np.asarray(values, dtype=float))

    def maxwellian(self, T: float) -> "VelocityGrid":
        return self.with_values(maxwellian_density(self.v, T))

    def mass(self, values=None) -> float:
        g = self.values if values is None else values
        return float(np.sum(g) * self.dv)

    def second_moment(self, values=None) -> float:
        g = self.values if values is None else values
        v = self.v
        return float(np.sum(v * v * g) * self.dv)

    def temperature(self, values=None) -> float:
        g = self.values if values is None else values
        return self.second_moment(g) / self.mass(g)

    def same_mesh(self, other: "VelocityGrid") -> bool:
        return self.n == other.n and self.v_max == other.v_max


@dataclass(frozen=True)
class PhaseGrid:
    """Tensor grid ``n_x * n_v`` over ``[-L/2, L/2) x [-v_max, v_max]``, periodic in x."""

    domain: DomainSpec
    vgrid: VelocityGrid
    n_x: int
    values: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.domain.d != 1:
            raise ValueError("phase grids are one-dimensional in space")
        if self.n_x < 2:
            raise ValueError("need at least two spatial cells")
        if self.values is not None:
            vals = np.asarray(self.values, dtype=float)
            if vals.shape != (self.n_x, self.vgrid.n):
                raise ValueError(f"values must have shape ({self.n_x}, {self.vgrid.n})")
            object.__setattr__(self, "values", vals)

    @property
    def L(self) -> float:
        return self.domain.L

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.L + self.dx * np.arange(self.n_x)

    @property
    def dx(self) -> float:
        return self.L / self.n_x

    @property
    def v(self) -> np.ndarray:
        return self.vgrid.v

    @property
    def dv(self) -> float:
        return self.vgrid.dv

    def with_values(self, values) -> "PhaseGrid":
        return PhaseGrid(self.domain, self.vgrid, self.n_x, np.asarray(values, dtype=float))

    def mass(self, values=None) -> float:
        f = self.values if values is None else values
        return float(np.sum(f) * self.dx * self.dv)

    def velocity_marginal(self, values=None) -> np.ndarray:
        f = self.values if values is None else values
        return np.sum(f, axis=0) * self.dx

    def temperature(self, values=None) -> float:
        f = self.values if values is None else values
        return self.vgrid.temperature(self.velocity_marginal(f))


def sg_flux(g: np.ndarray, v: np.ndarray, dv: float, T: float) -> np.ndarray:
    """Face fluxes ``J_{i+1/2}`` along the last axis of ``g``."""
    vm = 0.5 * (v[1:] + v[:-1])
    w = vm * dv / T
    return (T / dv) * (bernoulli(-w) * g[..., 1:] - bernoulli(w) * g[..., :-1])


def fp_rate(g: np.ndarray, v: np.ndarray, dv: float, T: float) -> np.ndarray:
    """Discrete ``T g'' + (v g)'`` along the last axis with zero-flux ends."""
    J = sg_flux(g, v, dv, T)
    out = np.zeros_like(g)
    out[..., :-1] += J
    out[..., 1:] -= J
    return out / dv


def fp_operator_apply(grid: VelocityGrid, T: float) -> VelocityGrid:
    """Apply the conservative exponentially fitted Fokker-Planck operator ``G_T``."""
    if not T > 0:
        raise ValueError("temperature must be positive")
    if grid.values is None:
        raise ValueError("grid carries no density values")
    return grid.with_values(fp_rate(grid.values, grid.v, grid.dv, T))


def energy_consistent_temperature(g: np.ndarray, v: np.ndarray, dv: float, T_guess: float | None = None) -> float:
    """Temperature for which the discrete operator leaves ``sum v^2 g dv`` unchanged.

    ``g`` may carry leading axes (spatial columns); they are summed first since the
    flux is linear in ``g``. The result differs from the grid temperature by
    ``O(dv^2)``.
    """
    gm = g if g.ndim == 1 else g.reshape(-1, g.shape[-1]).sum(axis=0)
    vm = 0.5 * (v[1:] + v[:-1])
    if T_guess is None:
        T_guess = float(np.sum(v * v * gm) / np.sum(gm))

    def energy_flux(T):
        return float(np.dot(vm, sg_flux(gm, v, dv, T)))

    try:
        return float(optimize.newton(energy_flux, T_guess, x1=T_guess * (1 + 1e-4), tol=1e-15 * T_guess, maxiter=50))
    except RuntimeError:
        return float(optimize.brentq(energy_flux, 0.25 * T_guess, 4.0 * T_guess, xtol=1e-15 * T_guess))


def heun_stable_dt(v: np.ndarray, dv: float, T_max: float, safety: float = 0.9) -> float:
    """Largest Heun step for the operator at temperatures up to ``T_max``.

    Gershgorin bounds the spectrum by twice the largest diagonal entry; Heun is
    stable (and positivity preserving, being an average of forward Euler steps)
    for ``dt * max|a_ii| <= 1``.
    """
    vm = 0.5 * (v[1:] + v[:-1])
    # the diagonal T (B(w) + B(-w)) / dv^2 increases with T, so T_max bounds it
    w = vm * dv / T_max
    diag = np.zeros_like(v)
    diag[:-1] += (T_max / dv ** 2) * bernoulli(w)
    diag[1:] += (T_max / dv ** 2) * bernoulli(-w)
    return safety / float(np.max(diag))
