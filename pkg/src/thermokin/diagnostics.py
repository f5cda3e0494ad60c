"""Distances, statistical tests, entropy, hydrodynamic fields and finite-state
Doeblin coefficients."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .grids import PhaseGrid, VelocityGrid

KS_99 = 1.628  # asymptotic 99% critical value of sqrt(N) * D


# -- gridded densities -------------------------------------------------------

def _grid_arrays(a, b):
    if isinstance(a, VelocityGrid) and isinstance(b, VelocityGrid):
        if not a.same_mesh(b):
            raise ValueError("velocity grids do not match")
        return a.values, b.values, a.dv, None
    if isinstance(a, PhaseGrid) and isinstance(b, PhaseGrid):
        if a.n_x != b.n_x or a.L != b.L or not a.vgrid.same_mesh(b.vgrid):
            raise ValueError("phase grids do not match")
        return a.values, b.values, a.dv, a.dx
    raise TypeError("expected two VelocityGrid or two PhaseGrid values")


def _integrate(h, dv, dx):
    # trapezoid in v; in x the periodic trapezoid rule is the plain sum
    out = np.trapezoid(h, dx=dv, axis=-1)
    if dx is not None:
        out = np.sum(out) * dx
    return float(out)


def l1_distance(a, b) -> float:
    """Trapezoidal ``int |a - b|`` over matching grids."""
    fa, fb, dv, dx = _grid_arrays(a, b)
    return _integrate(np.abs(fa - fb), dv, dx)


def relative_entropy(f, g) -> float:
    """``int f log(f/g)`` with ``0 log 0 = 0``; ``inf`` if ``f > 0`` where ``g = 0``."""
    ff, gg, dv, dx = _grid_arrays(f, g)
    pos = ff > 0
    if np.any(pos & (gg <= 0)):
        return math.inf
    h = np.zeros_like(ff)
    h[pos] = ff[pos] * np.log(ff[pos] / gg[pos])
    return _integrate(h, dv, dx)


@dataclass(frozen=True)
class HydroFields:
    x: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    T: np.ndarray

    @property
    def momentum(self):
        return self.rho * np.nan_to_num(self.u)

    @property
    def pressure(self):
        return self.rho * self.T


def hydrodynamic_moments(f: PhaseGrid, rho_floor: float = 1e-12) -> HydroFields:
    """Density, mean velocity and temperature per spatial column.

    ``u`` and ``T`` are NaN wherever the density is below ``rho_floor``.
    """
    v = f.v
    vals = f.values
    rho = np.trapezoid(vals, dx=f.dv, axis=-1)
    mom = np.trapezoid(vals * v, dx=f.dv, axis=-1)
    ok = rho > rho_floor
    u = np.full(rho.shape, np.nan)
    T = np.full(rho.shape, np.nan)
    u[ok] = mom[ok] / rho[ok]
    dev = (v[None, :] - np.where(ok, u, 0.0)[:, None]) ** 2
    e = np.trapezoid(vals * dev, dx=f.dv, axis=-1)
    T[ok] = e[ok] / rho[ok]
    return HydroFields(f.x, rho, u, T)


# -- histograms --------------------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    """Counts over a product of binnings, with an underflow and overflow cell per axis.

    ``counts`` has shape ``(len(e) + 1 for e in edges)``: index 0 on an axis is
    the underflow cell and the last index the overflow cell.
    """

    edges: tuple[np.ndarray, ...]
    counts: np.ndarray

    def __post_init__(self):
        edges = tuple(np.asarray(e, dtype=float) for e in self.edges)
        for e in edges:
            if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
                raise ValueError("bin edges must be strictly increasing")
        counts = np.asarray(self.counts)
        if counts.shape != tuple(e.size + 1 for e in edges):
            raise ValueError("count array does not match the edges")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "counts", counts)

    @staticmethod
    def cell_index(samples, edges) -> np.ndarray:
        """Flat cell index of each sample (rows are samples, columns axes)."""
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        idx = [np.searchsorted(np.asarray(e), samples[:, i], side="right") for i, e in enumerate(edges)]
        shape = tuple(len(e) + 1 for e in edges)
        return np.ravel_multi_index(idx, shape)

    @classmethod
    def from_samples(cls, samples, edges) -> "Histogram":
        edges = tuple(np.asarray(e, dtype=float) for e in edges)
        shape = tuple(e.size + 1 for e in edges)
        flat = cls.cell_index(samples, edges)
        counts = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
        return cls(edges, counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def overflow(self) -> int:
        """Samples in any tail cell."""
        inner = self.counts[tuple(slice(1, -1) for _ in self.edges)]
        return self.total - int(inner.sum())

    def probabilities(self) -> np.ndarray:
        return self.counts / self.total

    def compatible(self, other: "Histogram") -> bool:
        return len(self.edges) == len(other.edges) and all(
            a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.edges, other.edges))


def tv_histogram(h1: Histogram, h2: Histogram, n_boot: int = 200,
                 rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Total variation ``(1/2) sum |p1 - p2|`` over all cells and its bootstrap SE.

    The bootstrap redraws each histogram multinomially from its own empirical
    cell probabilities.
    """
    if not h1.compatible(h2):
        raise ValueError("histograms use different binnings")
    p1 = h1.probabilities().ravel()
    p2 = h2.probabilities().ravel()
    tv = 0.5 * float(np.abs(p1 - p2).sum())
    if n_boot <= 1:
        return tv, float("nan")
    rng = np.random.default_rng(0) if rng is None else rng
    b1 = rng.multinomial(h1.total, p1, size=n_boot) / h1.total
    b2 = rng.multinomial(h2.total, p2, size=n_boot) / h2.total
    boot = 0.5 * np.abs(b1 - b2).sum(axis=1)
    return tv, float(np.std(boot, ddof=1))


# -- goodness of fit ---------------------------------------------------------

@dataclass(frozen=True)
class KSResult:
    D: float
    n: int
    passed: bool
    critical: float


def ks_statistic(samples, cdf: Callable, level_const: float = KS_99) -> KSResult:
    """One-sample Kolmogorov-Smirnov distance; passes iff ``D < 1.628 / sqrt(N)``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < 100:
        raise ValueError("need at least 100 samples")
    F = np.asarray(cdf(x), dtype=float)
    if np.any(np.diff(F) < -1e-12) or np.any(F < -1e-12) or np.any(F > 1 + 1e-12):
        raise ValueError("CDF evaluator is not a monotone map into [0, 1]")
    ranks = np.arange(1, n + 1) / n
    D = float(max(np.max(ranks - F), np.max(F - (ranks - 1.0 / n))))
    crit = level_const / math.sqrt(n)
    return KSResult(D, n, D < crit, crit)


def uniformity_chisquare(x, L: float, bins: int = 64):
    """Chi-square test of positions on ``[-L/2, L/2)`` against the uniform law."""
    counts, _ = np.histogram(np.asarray(x).ravel(), bins=bins, range=(-0.5 * L, 0.5 * L))
    return stats.chisquare(counts)


# -- finite-state Doeblin coefficients ---------------------------------------

@dataclass(frozen=True)
class FiniteKernel:
    """Row-stochastic transition matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.matrix, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("kernel must be a square matrix")
        if np.any(P < 0) or np.any(P > 1):
            raise ValueError("entries must lie in [0, 1]")
        if np.any(np.abs(P.sum(axis=1) - 1) > 1e-12):
            raise ValueError("rows must sum to 1")
        P = P.copy()
        P.flags.writeable = False
        object.__setattr__(self, "matrix", P)

    def __matmul__(self, other: "FiniteKernel") -> "FiniteKernel":
        P = self.matrix @ other.matrix
        # renormalize rounding so composition stays stochastic
        P = np.clip(P, 0.0, 1.0)
        return FiniteKernel(P / P.sum(axis=1, keepdims=True))

    @classmethod
    def random(cls, rng: np.random.Generator, n: int, concentration: float = 1.0) -> "FiniteKernel":
        return cls(rng.dirichlet(np.full(n, concentration), size=n))


def doeblin_coefficient(kernel: FiniteKernel) -> float:
    """``max_{i,j} TV(P_i, P_j)`` over all pairs of rows."""
    P = kernel.matrix
    n = P.shape[0]
    best = 0.0
    for i, j in itertools.combinations(range(n), 2):
        best = max(best, 0.5 * float(np.abs(P[i] - P[j]).sum()))
    return best


@dataclass
class SubmultiplicativityReport:
    coefficients: list[float]
    checked: int
    failures: list[tuple[int, int, int, float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def doeblin_submultiplicativity_check(kernels: Sequence[FiniteKernel], slack: float = 1e-12) -> SubmultiplicativityReport:
    """Check ``rho(P_i..P_j) <= rho(P_i..P_m) rho(P_{m+1}..P_j)`` for every
    contiguous product and every split point."""
    kernels = list(kernels)
    if not kernels:
        raise ValueError("no kernels given")
    n = kernels[0].matrix.shape[0]
    if any(k.matrix.shape != (n, n) for k in kernels):
        raise ValueError("kernels are not composable")
    m = len(kernels)
    prod: dict[tuple[int, int], FiniteKernel] = {}
    coef: dict[tuple[int, int], float] = {}
    for i in range(m):
        prod[i, i] = kernels[i]
        for j in range(i + 1, m):
            prod[i, j] = prod[i, j - 1] @ kernels[j]
    for key, K in prod.items():
        coef[key] = doeblin_coefficient(K)
    report = SubmultiplicativityReport([coef[i, i] for i in range(m)], 0)
    for i in range(m):
        for j in range(i + 1, m):
            for split in range(i, j):
                lhs = coef[i, j]
                rhs = coef[i, split] * coef[split + 1, j]
                report.checked += 1
                if lhs > rhs + slack:
                    report.failures.append((i, split, j, lhs, rhs))
    return report
