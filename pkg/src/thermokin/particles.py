"""Event-driven exact Monte Carlo for the thermostatted kinetic models.

Each particle carries its own Poisson clock. Between clock rings it moves
exactly: an Ornstein-Uhlenbeck transition drawn from the closed-form Gaussian
law (kinetic Fokker-Planck model) or free streaming (BGK model). At a ring its
velocity is redrawn from a reservoir Maxwellian, position unchanged. There is no
time step anywhere; checkpoints only decide when statistics are taken.

Random streams: an experiment takes one root seed, and
``numpy.random.SeedSequence(seed).spawn(n)`` yields the independent child
streams (one per ensemble or per chain family). For a fixed seed and particle
count every run is bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .diagnostics import Histogram
from .model import ModelConfig, PhasePoint, TemperatureSchedule, wrap_position
from .ou_kernel import doeblin_lower_bound, ou_step_arrays

Mode = Literal["schedule", "self-consistent"]


def spawn_streams(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generators split from one root seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


@dataclass
class Ensemble:
    """``N`` particles on the torus carried through time."""

    x: np.ndarray
    v: np.ndarray
    model: ModelConfig
    rng: np.random.Generator
    t: float = 0.0
    next_event: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.x.ndim == 1:
            self.x = self.x[:, None]
        if self.v.ndim == 1:
            self.v = self.v[:, None]
        if self.x.shape != self.v.shape or self.x.shape[0] < 1:
            raise ValueError("ensemble needs at least one particle with matching x and v")
        if self.x.shape[1] != self.model.domain.d:
            raise ValueError("particle dimension differs from the domain dimension")
        self.x = wrap_position(self.x, self.model.domain.L)

    @classmethod
    def thermal(cls, model: ModelConfig, n: int, rng: np.random.Generator, T_init: float | None = None,
                zero_momentum: bool = False) -> "Ensemble":
        """Uniform positions and ``m_{T_init}`` velocities (``T_init`` defaults to ``model.T0``).

        With ``zero_momentum`` velocities are drawn in antithetic pairs so the
        total momentum is exactly zero.
        """
        d, L = model.domain.d, model.domain.L
        T_init = model.T0 if T_init is None else T_init
        x = rng.uniform(-0.5 * L, 0.5 * L, size=(n, d))
        if zero_momentum:
            half = rng.standard_normal(((n + 1) // 2, d))
            v = np.concatenate([half, -half])[:n] * math.sqrt(T_init)
        else:
            v = rng.standard_normal((n, d)) * math.sqrt(T_init)
        return cls(x, v, model, rng)

    @classmethod
    def from_point(cls, model: ModelConfig, point: PhasePoint, n: int, rng: np.random.Generator,
                   t: float = 0.0) -> "Ensemble":
        x = np.tile(point.x, (n, 1))
        v = np.tile(point.v, (n, 1))
        return cls(x, v, model, rng, t)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def temperature(self) -> float:
        return float(np.mean(np.sum(self.v ** 2, axis=1)) / self.d)

    def points(self) -> list[PhasePoint]:
        L = self.model.domain.L
        return [PhasePoint(xi, vi, L) for xi, vi in zip(self.x, self.v)]


@dataclass
class SimRecord:
    times: list[float] = field(default_factory=list)
    T_hat: list[float] = field(default_factory=list)
    T_sched: list[float] = field(default_factory=list)
    mean_v: list[np.ndarray] = field(default_factory=list)
    v_hist: list[Histogram] = field(default_factory=list)
    x_hist: list[Histogram] = field(default_factory=list)
    snapshots: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    reservoir_counts: np.ndarray | None = None
    n: int = 0

    def standard_error(self, i: int, d: int = 1) -> float:
        """SE of the temperature estimate, ``sqrt(2/d) T / sqrt(N)`` for Gaussian tails."""
        return math.sqrt(2.0 / d) * self.T_sched[i] / math.sqrt(self.n)


def _default_edges(model: ModelConfig, n_v: int = 200, n_x: int = 64):
    vmax = 10.0 * math.sqrt(max(float(np.max(model.reservoirs.temps)), model.T0))
    L = model.domain.L
    return np.linspace(-vmax, vmax, n_v + 1), np.linspace(-0.5 * L, 0.5 * L, n_x + 1)


def _checkpoint_list(t0: float, t_end: float, checkpoints) -> list[float]:
    if not t_end > t0:
        raise ValueError("end time must exceed the current time")
    cps = sorted(float(c) for c in (checkpoints if checkpoints is not None else ()) if t0 < c <= t_end)
    if not cps or cps[-1] != t_end:
        cps.append(float(t_end))
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must be strictly increasing")
    return cps


def _record(rec: SimRecord, ens: Ensemble, sched_T: float, v_edges, x_edges, snapshot: bool):
    rec.times.append(ens.t)
    rec.T_hat.append(ens.temperature())
    rec.T_sched.append(sched_T)
    rec.mean_v.append(ens.v.mean(axis=0))
    rec.v_hist.append(Histogram.from_samples(ens.v[:, 0], (v_edges,)))
    rec.x_hist.append(Histogram.from_samples(ens.x[:, 0], (x_edges,)))
    if snapshot:
        rec.snapshots.append((ens.x.copy(), ens.v.copy()))


def _resample_reservoir(rng, model: ModelConfig, m: int, d: int, counts: np.ndarray):
    res = model.reservoirs
    j = rng.choice(res.k, size=m, p=res.weights)
    counts += np.bincount(j, minlength=res.k)
    return rng.standard_normal((m, d)) * np.sqrt(res.temps[j])[:, None]


def _init_clock(ens: Ensemble, rate: float):
    if ens.next_event is None or ens.next_event.shape[0] != ens.n:
        ens.next_event = ens.t + ens.rng.exponential(1.0 / rate, size=ens.n)


def simulate_kfp(ensemble: Ensemble, t_end: float, checkpoints: Sequence[float] | None = None,
                 mode: Mode = "schedule", snapshot: bool = False, edges=None) -> SimRecord:
    """Advance a kinetic Fokker-Planck ensemble to ``t_end`` exactly.

    ``mode='schedule'`` drives the diffusion with the closed-form temperature
    law started from ``model.T0`` at time 0. ``mode='self-consistent'`` freezes
    the ensemble temperature at each checkpoint and uses it until the next one.
    """
    ens = ensemble
    model = ens.model
    if model.kind != "kfp":
        raise ValueError("simulate_kfp needs a kinetic Fokker-Planck model")
    if mode not in ("schedule", "self-consistent"):
        raise ValueError(f"unknown mode {mode!r}")
    cps = _checkpoint_list(ens.t, t_end, checkpoints)
    rng, L, d = ens.rng, model.domain.L, ens.d
    eta = model.reservoirs.eta
    schedule = model.schedule
    v_edges, x_edges = _default_edges(model) if edges is None else edges
    rec = SimRecord(n=ens.n, reservoir_counts=np.zeros(model.reservoirs.k, dtype=np.int64))
    _init_clock(ens, eta)

    for t_next in cps:
        if mode == "schedule":
            sched = schedule
        else:
            # a constant schedule with T0 == T_inf has no transient
            sched = TemperatureSchedule.constant(ens.temperature(), eta)
        own = np.full(ens.n, ens.t)
        while True:
            hit = np.flatnonzero(ens.next_event <= t_next)
            if hit.size == 0:
                break
            te = ens.next_event[hit]
            u = te - own[hit]
            moving = u > 0
            if np.any(moving):
                idx = hit[moving]
                ens.x[idx], ens.v[idx] = ou_step_arrays(rng, own[idx], u[moving], ens.x[idx], ens.v[idx], sched, L)
            ens.v[hit] = _resample_reservoir(rng, model, hit.size, d, rec.reservoir_counts)
            own[hit] = te
            ens.next_event[hit] = te + rng.exponential(1.0 / eta, size=hit.size)
        u = t_next - own
        moving = np.flatnonzero(u > 0)
        if moving.size:
            ens.x[moving], ens.v[moving] = ou_step_arrays(rng, own[moving], u[moving], ens.x[moving],
                                                          ens.v[moving], sched, L)
        ens.t = t_next
        _record(rec, ens, float(schedule(t_next)), v_edges, x_edges, snapshot)
    return rec


def simulate_bgk(ensemble: Ensemble, t_end: float, checkpoints: Sequence[float] | None = None,
                 snapshot: bool = False, edges=None) -> SimRecord:
    """Advance a BGK ensemble: free streaming between events at rate ``alpha + eta``.

    An event is a thermostat redraw from ``m_{T(t)}`` with probability
    ``alpha / (alpha + eta)``, otherwise a reservoir redraw.
    """
    ens = ensemble
    model = ens.model
    if model.kind != "bgk":
        raise ValueError("simulate_bgk needs a BGK model")
    cps = _checkpoint_list(ens.t, t_end, checkpoints)
    rng, L, d = ens.rng, model.domain.L, ens.d
    alpha, eta = model.alpha, model.reservoirs.eta
    rate = alpha + eta
    schedule = model.schedule
    v_edges, x_edges = _default_edges(model) if edges is None else edges
    rec = SimRecord(n=ens.n, reservoir_counts=np.zeros(model.reservoirs.k, dtype=np.int64))
    _init_clock(ens, rate)

    for t_next in cps:
        own = np.full(ens.n, ens.t)
        while True:
            hit = np.flatnonzero(ens.next_event <= t_next)
            if hit.size == 0:
                break
            te = ens.next_event[hit]
            ens.x[hit] = wrap_position(ens.x[hit] + ens.v[hit] * (te - own[hit])[:, None], L)
            thermo = rng.random(hit.size) < alpha / rate
            th, rs = hit[thermo], hit[~thermo]
            if th.size:
                T_now = schedule(ens.next_event[th])
                ens.v[th] = rng.standard_normal((th.size, d)) * np.sqrt(T_now)[:, None]
            if rs.size:
                ens.v[rs] = _resample_reservoir(rng, model, rs.size, d, rec.reservoir_counts)
            own[hit] = te
            ens.next_event[hit] = te + rng.exponential(1.0 / rate, size=hit.size)
        ens.x = wrap_position(ens.x + ens.v * (t_next - own)[:, None], L)
        ens.t = t_next
        _record(rec, ens, float(schedule(t_next)), v_edges, x_edges, snapshot)
    return rec


def simulate(ensemble: Ensemble, t_end: float, checkpoints=None, **kw) -> SimRecord:
    if ensemble.model.kind == "kfp":
        return simulate_kfp(ensemble, t_end, checkpoints, **kw)
    kw.pop("mode", None)
    return simulate_bgk(ensemble, t_end, checkpoints, **kw)


def event_e_frequency(trials: int, t_0: float, eta: float, rng: np.random.Generator) -> float:
    """Empirical frequency of exactly one clock ring in ``(t_0, t_0 + 1/eta]`` and
    none in ``(t_0 + 1/eta, t_0 + 2/eta]``."""
    if trials < 1:
        raise ValueError("need at least one trial")
    first = t_0 + rng.exponential(1.0 / eta, size=trials)
    second = first + rng.exponential(1.0 / eta, size=trials)
    hit = (first <= t_0 + 1.0 / eta) & (second > t_0 + 2.0 / eta)
    return float(np.mean(hit))


@dataclass
class TVSeries:
    times: np.ndarray
    tv: np.ndarray
    se: np.ndarray
    decrement_se: np.ndarray
    decay_factors: np.ndarray
    undersampled: np.ndarray
    coupling_weight: float
    window: float

    def bound(self, squared: bool = True) -> float:
        """One-window deficit bound ``1 - e^{-2} C^2`` (or ``C`` when not squared)."""
        c = self.coupling_weight ** 2 if squared else self.coupling_weight
        return 1.0 - math.exp(-2.0) * c

    def decrements(self) -> np.ndarray:
        return self.tv[:-1] - self.tv[1:]

    def nonincreasing(self, k: float = 3.0) -> bool:
        """Every decrement is at least ``-k`` bootstrap standard errors."""
        return bool(np.all(self.decrements() >= -k * self.decrement_se))


def coupled_tv_experiment(model: ModelConfig, z0: PhasePoint, z1: PhasePoint, t_0: float, horizon: float,
                          partition, N: int, seed: int = 0, n_boot: int = 200) -> TVSeries:
    """Histogram total variation between chains started at ``z0`` and ``z1``.

    ``N`` independent kinetic Fokker-Planck chains are started from each point
    at time ``t_0`` and binned on ``partition = (x_edges, v_edges)`` (tail cells
    included) at every multiple of ``2/eta`` up to ``t_0 + horizon``. Standard
    errors come from a bootstrap over chains, so the SE of each decrement
    accounts for the correlation between successive times.
    """
    if model.kind != "kfp":
        raise ValueError("the coupling experiment uses the kinetic Fokker-Planck process")
    eta = model.reservoirs.eta
    window = 2.0 / eta
    n_win = max(1, int(math.floor(horizon / window + 1e-9)))
    times = t_0 + window * np.arange(1, n_win + 1)
    x_edges, v_edges = (np.asarray(e, dtype=float) for e in partition)
    edges = (x_edges, v_edges)
    shape = (x_edges.size + 1, v_edges.size + 1)
    n_cells = shape[0] * shape[1]

    cells = []
    rngs = spawn_streams(seed, 3)
    for z, rng in zip((z0, z1), rngs[:2]):
        ens = Ensemble.from_point(model, z, N, rng, t=t_0)
        rec = simulate_kfp(ens, times[-1], times, snapshot=True)
        cells.append(np.stack([Histogram.cell_index(np.column_stack([x[:, 0], v[:, 0]]), edges)
                               for x, v in rec.snapshots]))

    def tv_all(i0, i1):
        out = np.empty(n_win)
        for m in range(n_win):
            p = np.bincount(cells[0][m, i0], minlength=n_cells) / i0.size
            q = np.bincount(cells[1][m, i1], minlength=n_cells) / i1.size
            out[m] = 0.5 * np.abs(p - q).sum()
        return out

    ident = np.arange(N)
    tv = tv_all(ident, ident)
    boot_rng = rngs[2]
    boots = np.array([tv_all(boot_rng.integers(0, N, N), boot_rng.integers(0, N, N)) for _ in range(n_boot)])
    se = boots.std(axis=0, ddof=1)
    dse = np.diff(boots, axis=1).std(axis=0, ddof=1) if n_win > 1 else np.zeros(0)
    decay = tv[1:] / np.where(tv[:-1] > 0, tv[:-1], np.nan)
    under = np.empty(n_win, dtype=int)
    for m in range(n_win):
        expected = 0.5 * (np.bincount(cells[0][m], minlength=n_cells) + np.bincount(cells[1][m], minlength=n_cells))
        under[m] = int(np.sum((expected > 0) & (expected < 5)))
    C = doeblin_lower_bound(eta, model.reservoirs.T_inf, model.domain.L, s=t_0, schedule=model.schedule)
    return TVSeries(times, tv, se, dse, decay, under, C, window)
