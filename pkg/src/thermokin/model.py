"""Reservoirs, temperature schedules, Maxwellians and phase-space points."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

CollisionKind = Literal["kfp", "bgk"]


@dataclass(frozen=True)
class Reservoir:
    """A thermostat acting at rate ``eta`` with temperature ``T``."""

    eta: float
    T: float

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ValueError(f"reservoir rate must be positive, got {self.eta}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"reservoir temperature must be positive, got {self.T}")


@dataclass(frozen=True)
class ReservoirSet:
    """Reservoirs sorted by temperature, with total rate and equilibrium temperature."""

    reservoirs: tuple[Reservoir, ...]

    def __post_init__(self):
        res = tuple(self.reservoirs)
        if not res:
            raise ValueError("at least one reservoir is required")
        object.__setattr__(self, "reservoirs", tuple(sorted(res, key=lambda r: r.T)))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "ReservoirSet":
        """Build from ``(eta_j, T_j)`` pairs."""
        return cls(tuple(Reservoir(float(e), float(t)) for e, t in pairs))

    @classmethod
    def from_arrays(cls, etas: Sequence[float], temps: Sequence[float]) -> "ReservoirSet":
        if len(etas) != len(temps):
            raise ValueError("rates and temperatures differ in length")
        return cls.from_pairs(zip(etas, temps))

    def __len__(self):
        return len(self.reservoirs)

    @property
    def k(self) -> int:
        return len(self.reservoirs)

    @property
    def etas(self) -> np.ndarray:
        return np.array([r.eta for r in self.reservoirs])

    @property
    def temps(self) -> np.ndarray:
        return np.array([r.T for r in self.reservoirs])

    @property
    def eta(self) -> float:
        return float(math.fsum(r.eta for r in self.reservoirs))

    @property
    def T_inf(self) -> float:
        t = math.fsum(r.eta * r.T for r in self.reservoirs) / self.eta
        # clamp rounding so that T_1 <= T_inf <= T_k holds exactly
        return min(max(t, self.reservoirs[0].T), self.reservoirs[-1].T)

    @property
    def weights(self) -> np.ndarray:
        """Selection probabilities ``eta_j / eta``."""
        return self.etas / self.eta


def equilibrium_parameters(reservoirs: ReservoirSet | Iterable[tuple[float, float]]):
    """Return ``(eta, T_inf)``: the total rate and the rate-weighted mean temperature."""
    if not isinstance(reservoirs, ReservoirSet):
        reservoirs = ReservoirSet.from_pairs(reservoirs)
    return reservoirs.eta, reservoirs.T_inf


@dataclass(frozen=True)
class TemperatureSchedule:
    """Global kinetic temperature ``T(t) = T_inf + exp(-eta t) (T0 - T_inf)``."""

    T_inf: float
    T0: float
    eta: float

    def __post_init__(self):
        for name in ("T_inf", "T0", "eta"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be positive and finite, got {val}")

    @classmethod
    def from_reservoirs(cls, reservoirs: ReservoirSet, T0: float) -> "TemperatureSchedule":
        return cls(reservoirs.T_inf, float(T0), reservoirs.eta)

    @classmethod
    def constant(cls, T: float, eta: float = 1.0) -> "TemperatureSchedule":
        return cls(float(T), float(T), float(eta))

    @property
    def excess(self) -> float:
        return self.T0 - self.T_inf

    def __call__(self, t):
        return temperature_at(self, t)


def temperature_at(schedule: TemperatureSchedule, t):
    """Evaluate the schedule at ``t >= 0`` (scalar or array)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("temperature schedule is defined for t >= 0 only")
    out = schedule.T_inf + np.exp(-schedule.eta * t_arr) * schedule.excess
    return float(out) if out.ndim == 0 else out


def temperature_rate(reservoirs: ReservoirSet, T):
    """Right-hand side of the temperature balance, ``sum_j eta_j (T_j - T)``."""
    T = np.asarray(T, dtype=float)
    out = np.sum(reservoirs.etas[:, None] * (reservoirs.temps[:, None] - T.ravel()[None, :]), axis=0)
    return float(out[0]) if T.ndim == 0 else out.reshape(T.shape)


def maxwellian_density(v, T: float, d: int | None = None):
    """Centered Gaussian velocity density with variance ``T`` per coordinate.

    For ``d`` omitted or 1, ``v`` holds scalar velocities and is evaluated
    elementwise. For ``d > 1`` the last axis of ``v`` holds the components.
    """
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    v = np.asarray(v, dtype=float)
    if d is None or d == 1:
        out = np.exp(-0.5 * v * v / T) / math.sqrt(2.0 * math.pi * T)
    else:
        if v.shape[-1] != d:
            raise ValueError(f"last axis must have length d={d}")
        sq = np.sum(v * v, axis=-1)
        out = np.exp(-0.5 * sq / T) * (2.0 * math.pi * T) ** (-0.5 * d)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DomainSpec:
    """Torus ``[-L/2, L/2)^d``."""

    L: float = 1.0
    d: int = 1

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"side length must be positive, got {self.L}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d}")

    @property
    def volume(self) -> float:
        return self.L ** self.d


def wrap_position(x, L: float):
    """Reduce coordinates modulo ``L`` into ``[-L/2, L/2)``."""
    x = np.asarray(x, dtype=float)
    half = 0.5 * L
    y = np.mod(x + half, L) - half
    # np.mod can return L itself for tiny negative inputs
    y = np.where(y >= half, y - L, y)
    return float(y) if y.ndim == 0 else y


@dataclass(frozen=True)
class PhasePoint:
    """A particle state; ``x`` is stored reduced to the torus."""

    x: np.ndarray
    v: np.ndarray
    L: float = 1.0

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float)).copy()
        v = np.atleast_1d(np.asarray(self.v, dtype=float)).copy()
        if x.shape != v.shape or x.ndim != 1:
            raise ValueError("position and velocity must be d-vectors of equal length")
        x = wrap_position(x, self.L)
        x = np.atleast_1d(x)
        x.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    @property
    def d(self) -> int:
        return self.x.shape[0]

    def __eq__(self, other):
        if not isinstance(other, PhasePoint):
            return NotImplemented
        return self.L == other.L and np.array_equal(self.x, other.x) and np.array_equal(self.v, other.v)

    def __hash__(self):
        return hash((self.L, self.x.tobytes(), self.v.tobytes()))


@dataclass(frozen=True)
class ModelConfig:
    """Everything that defines one thermostatted kinetic model."""

    reservoirs: ReservoirSet
    domain: DomainSpec = field(default_factory=DomainSpec)
    kind: CollisionKind = "kfp"
    alpha: float = 1.0
    T0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("kfp", "bgk"):
            raise ValueError(f"unknown collision kind {self.kind!r}")
        if self.kind == "bgk" and not self.alpha >= 0:
            raise ValueError("BGK rate must be nonnegative")
        if not self.T0 > 0:
            raise ValueError("initial temperature must be positive")

    @property
    def schedule(self) -> TemperatureSchedule:
        return TemperatureSchedule.from_reservoirs(self.reservoirs, self.T0)
