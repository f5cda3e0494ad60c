"""Grid solvers for the velocity-space equation and the 1-d periodic kinetic equation.

Time stepping is Strang splitting. The reservoir relaxation is linear with
constant coefficients and is solved exactly; the Fokker-Planck part uses Heun's
method at a step size below the recorded stability bound; BGK relaxation is
integrated exponentially. In the spatial solver free transport is an exact
spectral shift (or a limited second-order upwind scheme under a CFL bound).

The Fokker-Planck temperature is the energy-consistent one from
:func:`grids.energy_consistent_temperature`, so the collision step alone leaves
the discrete second moment unchanged, mirroring the continuous operator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .diagnostics import HydroFields, hydrodynamic_moments, l1_distance, relative_entropy
from .grids import PhaseGrid, VelocityGrid, energy_consistent_temperature, fp_rate, heun_stable_dt
from .model import ModelConfig, maxwellian_density
from .steady_state import UnsupportedClosedForm, bgk_ness_density, fp_ness_density

log = logging.getLogger(__name__)


class SolverInstability(RuntimeError):
    """Negative density or mass drift beyond tolerance."""

    def __init__(self, message: str, t: float, min_value: float, mass_drift: float):
        super().__init__(f"{message} at t={t:.6g} (min={min_value:.3e}, mass drift={mass_drift:.3e})")
        self.t = t
        self.min_value = min_value
        self.mass_drift = mass_drift


@dataclass(frozen=True)
class SolverConfig:
    v_max: float
    n_v: int = 1024
    n_x: int = 128
    dt: float | None = None
    t_end: float = 20.0
    transport: Literal["spectral", "upwind"] = "spectral"
    safety: float = 0.9
    neg_tol: float = 1e-10
    mass_tol: float = 1e-6

    def __post_init__(self):
        if not self.v_max > 0 or self.n_v < 3 or self.n_x < 2:
            raise ValueError("invalid grid sizes")
        if not self.t_end > 0:
            raise ValueError("end time must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("time step must be positive")
        if self.transport not in ("spectral", "upwind"):
            raise ValueError(f"unknown transport scheme {self.transport!r}")

    @classmethod
    def for_model(cls, model: ModelConfig, n_v: int = 1024, **kw) -> "SolverConfig":
        T_max = max(float(np.max(model.reservoirs.temps)), model.T0)
        return cls(10.0 * math.sqrt(T_max), n_v, **kw)

    @property
    def vgrid(self) -> VelocityGrid:
        return VelocityGrid(self.v_max, self.n_v)

    def collision_dt_bound(self, T_max: float) -> float:
        g = self.vgrid
        return heun_stable_dt(g.v, g.dv, T_max, self.safety)

    def cfl_dt_bound(self, L: float) -> float:
        return self.safety * (L / self.n_x) / self.v_max if self.transport == "upwind" else math.inf

    def step_size(self, model: ModelConfig, spatial: bool = False) -> float:
        """The step actually used; a user ``dt`` above the stability bounds is rejected."""
        T_max = max(float(np.max(model.reservoirs.temps)), model.T0)
        bound = self.collision_dt_bound(T_max) if model.kind == "kfp" else math.inf
        if spatial:
            bound = min(bound, self.cfl_dt_bound(model.domain.L))
        if model.kind == "bgk" and not math.isfinite(bound):
            bound = 0.01
        if self.dt is None:
            dt = bound
        elif self.dt > bound * (1 + 1e-12):
            raise ValueError(f"time step {self.dt:g} exceeds the stability bound {bound:g}")
        else:
            dt = self.dt
        # land exactly on t_end
        return self.t_end / math.ceil(self.t_end / dt - 1e-12)


# -- shared collision pieces --------------------------------------------------

def _reservoir_target(model: ModelConfig, v: np.ndarray) -> np.ndarray:
    """``sum_j (eta_j/eta) m_{T_j}`` normalized to unit discrete mass."""
    res = model.reservoirs
    M = sum(p * maxwellian_density(v, T) for p, T in zip(res.weights, res.temps))
    return M / (np.sum(M) * (v[1] - v[0]))


def reference_ness(model: ModelConfig, v: np.ndarray) -> np.ndarray | None:
    """Closed-form velocity NESS on the nodes, or ``None`` where none is available."""
    res = model.reservoirs
    if model.kind == "bgk":
        if model.alpha == 0:
            return _reservoir_target(model, v)
        return bgk_ness_density(v, res, model.alpha)
    if res.k == 1 or np.ptp(res.temps) == 0:
        return maxwellian_density(v, float(res.temps[0]))
    try:
        return fp_ness_density(v, res)
    except UnsupportedClosedForm:
        return None


class _Collision:
    """One full collision step ``dt`` acting on the last axis of an array."""

    def __init__(self, model: ModelConfig, vgrid: VelocityGrid, dt: float):
        self.model = model
        self.v = vgrid.v
        self.dv = vgrid.dv
        self.dt = dt
        self.eta = model.reservoirs.eta
        self.M = _reservoir_target(model, self.v)
        self.T_inf = model.reservoirs.T_inf

    def _relax_half(self, g):
        return self.M + math.exp(-0.5 * self.eta * self.dt) * (g - self.M)

    def _marginal_temperature(self, g):
        gm = g if g.ndim == 1 else g.reshape(-1, g.shape[-1]).sum(axis=0)
        return float(np.sum(self.v ** 2 * gm) / np.sum(gm))

    def step(self, g: np.ndarray) -> np.ndarray:
        if self.model.kind == "kfp":
            g = self._relax_half(g)
            T = energy_consistent_temperature(g, self.v, self.dv)
            k1 = fp_rate(g, self.v, self.dv, T)
            k2 = fp_rate(g + self.dt * k1, self.v, self.dv, T)
            g = g + 0.5 * self.dt * (k1 + k2)
            return self._relax_half(g)
        # BGK: the thermostat keeps the temperature, so over the step it follows
        # the moment law; freeze it at the midpoint value
        alpha = self.model.alpha
        T0 = self._marginal_temperature(g)
        T_mid = self.T_inf + (T0 - self.T_inf) * math.exp(-0.5 * self.eta * self.dt)
        rho = g.sum(axis=-1, keepdims=True) * self.dv if g.ndim > 1 else 1.0
        target = (alpha * rho * maxwellian_density(self.v, T_mid) + self.eta * rho * self.M) / (alpha + self.eta)
        return target + math.exp(-(alpha + self.eta) * self.dt) * (g - target)


def _guard(g: np.ndarray, mass0: float, mass_fn, t: float, cfg: SolverConfig, clipped: list[float]):
    lo = float(g.min())
    drift = abs(mass_fn(g) - mass0)
    if lo < -cfg.neg_tol or drift > cfg.mass_tol:
        raise SolverInstability("solver instability", t, lo, drift)
    if lo < 0:
        neg = g < 0
        clipped[0] += float(mass_fn(np.where(neg, -g, 0.0)))
        g[neg] = 0.0
    return g


def _checkpoint_times(t_end: float, checkpoints) -> np.ndarray:
    cps = np.asarray(sorted(float(c) for c in (() if checkpoints is None else checkpoints) if 0 < c <= t_end), dtype=float)
    if cps.size == 0 or cps[-1] != t_end:
        cps = np.append(cps, t_end)
    return cps


# -- homogeneous solver -------------------------------------------------------

@dataclass
class HomogeneousResult:
    times: np.ndarray
    T_grid: np.ndarray
    T_sched: np.ndarray
    l1_to_ness: np.ndarray
    entropy: np.ndarray
    snapshots: list[VelocityGrid]
    dt: float
    clipped_mass: float = 0.0

    @property
    def final(self) -> VelocityGrid:
        return self.snapshots[-1]


def solve_homogeneous(config: SolverConfig, model: ModelConfig, g0: VelocityGrid | None = None,
                      checkpoints: Sequence[float] | None = None) -> HomogeneousResult:
    """Integrate the spatially homogeneous equation, default start ``m_{T0}``.

    ``entropy`` is the relative entropy to the reference NESS (``nan`` when
    none is known), so for one reservoir it is ``H(g | m_{T_1})``.
    """
    vgrid = config.vgrid
    if g0 is None:
        g0 = vgrid.maxwellian(model.T0)
    if not g0.same_mesh(vgrid):
        raise ValueError("initial grid does not match the solver configuration")
    g = g0.values.astype(float).copy()
    mass0 = vgrid.mass(g)
    if abs(mass0 - 1.0) > 1e-6 or g.min() < 0:
        raise ValueError("initial density must be nonnegative and normalized")
    dt = config.step_size(model)
    coll = _Collision(model, vgrid, dt)
    ness = reference_ness(model, vgrid.v)
    ness_grid = vgrid.with_values(ness) if ness is not None else None
    sched = model.schedule
    cps = _checkpoint_times(config.t_end, checkpoints)
    step_of = np.rint(cps / dt).astype(int)

    times, Tg, Ts, l1s, Hs, snaps = [], [], [], [], [], []
    clipped = [0.0]
    n_steps = int(step_of[-1])
    nxt = 0
    for s in range(1, n_steps + 1):
        g = coll.step(g)
        g = _guard(g, mass0, vgrid.mass, s * dt, config, clipped)
        while nxt < len(step_of) and step_of[nxt] == s:
            t = float(cps[nxt])
            snap = vgrid.with_values(g.copy())
            times.append(t)
            Tg.append(vgrid.temperature(g))
            Ts.append(float(sched(t)))
            l1s.append(l1_distance(snap, ness_grid) if ness_grid is not None else math.nan)
            Hs.append(relative_entropy(snap, ness_grid) if ness_grid is not None else math.nan)
            snaps.append(snap)
            nxt += 1
    if clipped[0] > 1e-8:
        log.warning("clipped %.3e of negative mass", clipped[0])
    return HomogeneousResult(np.array(times), np.array(Tg), np.array(Ts), np.array(l1s), np.array(Hs),
                             snaps, dt, clipped[0])


# -- spatial solver -----------------------------------------------------------

def _minmod(a, b):
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


class _Transport:
    def __init__(self, grid: PhaseGrid, dt: float, scheme: str):
        self.scheme = scheme
        self.v = grid.v
        self.c = grid.v * dt / grid.dx  # signed Courant numbers per column
        k = 2 * np.pi * np.fft.rfftfreq(grid.n_x, d=grid.dx)
        self.phase = np.exp(-1j * np.outer(k, grid.v) * dt)

    def step(self, f):
        if self.scheme == "spectral":
            return np.fft.irfft(np.fft.rfft(f, axis=0) * self.phase, n=f.shape[0], axis=0)
        # limited second-order upwind in flux form: conservative and periodic
        c = self.c[None, :]
        pos = np.where(c > 0, f, np.roll(f, -1, axis=0))
        slope = _minmod(f - np.roll(f, 1, axis=0), np.roll(f, -1, axis=0) - f)
        slope_up = np.where(c > 0, slope, np.roll(slope, -1, axis=0))
        face = pos + 0.5 * np.sign(c) * (1 - np.abs(c)) * slope_up
        flux = c * face
        return f - (flux - np.roll(flux, 1, axis=0))


@dataclass
class SpatialResult:
    times: np.ndarray
    T_grid: np.ndarray
    T_sched: np.ndarray
    l1_to_ness: np.ndarray
    rho_variation: np.ndarray
    hydro: list[HydroFields]
    final: PhaseGrid
    dt: float
    clipped_mass: float = 0.0

    @property
    def terminal_momentum(self) -> float:
        return float(np.max(np.abs(self.hydro[-1].momentum)))

    @property
    def terminal_pressure_variation(self) -> float:
        p = self.hydro[-1].pressure
        return float(np.max(p) - np.min(p))


def perturbed_initial(config: SolverConfig, model: ModelConfig, amplitude: float = 0.5, T: float | None = None) -> PhaseGrid:
    """``(1 + amplitude cos(2 pi x / L)) m_T(v) / L`` on the solver grid."""
    L = model.domain.L
    grid = PhaseGrid(model.domain, config.vgrid, config.n_x)
    T = model.T0 if T is None else T
    rho = (1 + amplitude * np.cos(2 * np.pi * grid.x / L)) / L
    m = maxwellian_density(grid.v, T)
    m = m / (np.sum(m) * grid.dv)
    return grid.with_values(rho[:, None] * m[None, :])


def solve_spatial(config: SolverConfig, model: ModelConfig, f0: PhaseGrid,
                  checkpoints: Sequence[float] | None = None) -> SpatialResult:
    """Strang-split solver for the 1-d periodic kinetic equation.

    Transport half step, full collision step (every column uses the one global
    temperature), transport half step.
    """
    if model.domain.d != 1:
        raise ValueError("the spatial solver is one-dimensional")
    if f0.n_x != config.n_x or not f0.vgrid.same_mesh(config.vgrid):
        raise ValueError("initial grid does not match the solver configuration")
    f = f0.values.astype(float).copy()
    mass0 = f0.mass(f)
    if abs(mass0 - 1.0) > 1e-6 or f.min() < 0:
        raise ValueError("initial density must be nonnegative and normalized")
    dt = config.step_size(model, spatial=True)
    coll = _Collision(model, config.vgrid, dt)
    trans = _Transport(f0, 0.5 * dt, config.transport)
    ness = reference_ness(model, f0.v)
    f_inf = f0.with_values(np.tile(ness / model.domain.L, (f0.n_x, 1))) if ness is not None else None
    sched = model.schedule
    cps = _checkpoint_times(config.t_end, checkpoints)
    step_of = np.rint(cps / dt).astype(int)

    times, Tg, Ts, l1s, var, hydro = [], [], [], [], [], []
    clipped = [0.0]
    nxt = 0
    for s in range(1, int(step_of[-1]) + 1):
        f = trans.step(f)
        f = coll.step(f)
        f = trans.step(f)
        f = _guard(f, mass0, f0.mass, s * dt, config, clipped)
        while nxt < len(step_of) and step_of[nxt] == s:
            snap = f0.with_values(f.copy())
            h = hydrodynamic_moments(snap)
            times.append(float(cps[nxt]))
            Tg.append(snap.temperature())
            Ts.append(float(sched(cps[nxt])))
            l1s.append(l1_distance(snap, f_inf) if f_inf is not None else math.nan)
            var.append(float(np.max(np.abs(h.rho - 1.0 / model.domain.L))))
            hydro.append(h)
            nxt += 1
    if clipped[0] > 1e-8:
        log.warning("clipped %.3e of negative mass", clipped[0])
    return SpatialResult(np.array(times), np.array(Tg), np.array(Ts), np.array(l1s), np.array(var), hydro,
                         f0.with_values(f), dt, clipped[0])


# -- rate fitting -------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    C: float
    c: float
    residual: float
    n_points: int
    n_floored: int = 0


def fit_exponential_rate(t, distance, window: tuple[float, float] | None = None,
                         floor: float | None = None) -> RateFit:
    """Least-squares fit of ``log d = log C - c t`` over times in ``window``.

    ``residual`` is the RMS of the log residuals. Nonpositive distances are
    rejected unless ``floor`` is given, in which case they are raised to it and
    counted in ``n_floored``.
    """
    t = np.asarray(t, dtype=float)
    d = np.asarray(distance, dtype=float)
    if t.shape != d.shape:
        raise ValueError("times and distances differ in length")
    if window is not None:
        keep = (t >= window[0]) & (t <= window[1])
        t, d = t[keep], d[keep]
    if t.size < 5:
        raise ValueError("need at least 5 points in the window")
    bad = ~(d > 0)
    if np.any(bad):
        if floor is None:
            raise ValueError("distances must be positive")
        d = np.where(bad, floor, d)
    A = np.column_stack([np.ones_like(t), -t])
    coef, *_ = np.linalg.lstsq(A, np.log(d), rcond=None)
    resid = np.log(d) - A @ coef
    return RateFit(float(math.exp(coef[0])), float(coef[1]), float(np.sqrt(np.mean(resid ** 2))),
                   int(t.size), int(bad.sum()))


def distance_band_window(t, distance, lo: float, hi: float) -> tuple[float, float]:
    """Time span over which ``distance`` lies in ``[lo, hi]``."""
    t = np.asarray(t, dtype=float)
    d = np.asarray(distance, dtype=float)
    inside = t[(d >= lo) & (d <= hi)]
    if inside.size == 0:
        raise ValueError("no distances inside the band")
    return float(inside.min()), float(inside.max())
