"""Exact transition law of the degenerate diffusion

    dv = -v dt + sqrt(2 T(t)) dW,   dx = v dt,

under the exponentially relaxing temperature ``T(t) = T_inf + (T0 - T_inf) e^{-eta t}``.

Started from ``(a, b)`` at time ``s``, the state at ``t = s + u`` is Gaussian with

    mu_v = e^{-u} b,   mu_x = a + (1 - e^{-u}) b,

and second moments given by Ito-isometry integrals of ``2 T(r)`` against
``e^{-2q}``, ``e^{-q}(1 - e^{-q})`` and ``(1 - e^{-q})^2`` with ``q = t - r``.
Writing ``T(r) = T_inf + K e^{-eta (u - q)}`` with ``K = (T0 - T_inf) e^{-eta s}``,
every moment is ``2 T_inf I(0) + 2 K I(eta)`` for the kernel integrals

    I(lam) = int_0^u kernel(q) e^{-lam (u - q)} dq,

which reduce to ``phi_c = (e^{-c u} - e^{-lam u}) / (lam - c)``. The apparent poles
at ``eta in {1, 2}`` are removed by writing ``phi_c = u e^{-cu} (1 - e^{-z}) / z``
with ``z = (lam - c) u`` and evaluating ``(1 - e^{-z}) / z`` through ``expm1``.
For small ``u`` a Taylor series avoids the cancellation in ``phi_0 - 2 phi_1 + phi_2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import PhasePoint, TemperatureSchedule, wrap_position

_SERIES_TERMS = 40


def _phi(c: float, lam, u):
    """``int_0^u e^{-c q} e^{-lam (u - q)} dq`` elementwise."""
    lam = np.asarray(lam, dtype=float)
    u = np.asarray(u, dtype=float)
    z = (lam - c) * u
    small = np.abs(z) <= 1.0
    zs = np.where(small & (z != 0), z, 1.0)
    h = np.where(z == 0, 1.0, -np.expm1(-zs) / zs)
    near = u * np.exp(-c * u) * h
    denom = np.where(small, 1.0, lam - c)
    far = (np.exp(-c * u) - np.exp(-lam * u)) / denom
    return np.where(small, near, far)


def _series(lam, u):
    """Small-``u`` expansions of ``(I_vv, I_xv, I_xx)``.

    Each is ``e^{-lam u} sum_n c_n u^{n+1} / (n+1)!`` with
    ``c_n = (lam-2)^n``, ``(lam-1)^n - (lam-2)^n`` and
    ``lam^n - 2 (lam-1)^n + (lam-2)^n`` respectively.
    """
    p2 = np.ones_like(u)
    p1 = np.ones_like(u)
    p0 = np.ones_like(u)
    term_u = np.array(u, dtype=float)  # u^{n+1} / (n+1)!
    vv = np.zeros_like(u)
    xv = np.zeros_like(u)
    xx = np.zeros_like(u)
    for n in range(_SERIES_TERMS):
        dvv = p2 * term_u
        dxv = (p1 - p2) * term_u
        dxx = (p0 - 2.0 * p1 + p2) * term_u
        vv, xv, xx = vv + dvv, xv + dxv, xx + dxx
        if n >= 3 and np.all(np.abs(dxx) <= 1e-18 * np.abs(xx)) and np.all(np.abs(dvv) <= 1e-18 * np.abs(vv)) \
                and np.all(np.abs(dxv) <= 1e-18 * np.abs(xv)):
            break
        p2, p1, p0 = p2 * (lam - 2.0), p1 * (lam - 1.0), p0 * lam
        term_u = term_u * u / (n + 2)
    damp = np.exp(-lam * u)
    return damp * vv, damp * xv, damp * xx


def kernel_integrals(lam, u):
    """Return ``(I_vv, I_xv, I_xx)`` for decay rate ``lam`` over an interval ``u``."""
    lam, u = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(u, dtype=float))
    p0, p1, p2 = _phi(0.0, lam, u), _phi(1.0, lam, u), _phi(2.0, lam, u)
    i_vv = p2
    i_xv = p1 - p2
    i_xx = p0 - 2.0 * p1 + p2
    use_series = (u < 0.1) & (np.maximum(lam, 2.0) * u <= 2.0)
    if np.any(use_series):
        i_vv = np.array(i_vv, copy=True)
        i_xv = np.array(i_xv, copy=True)
        i_xx = np.array(i_xx, copy=True)
        i_vv[use_series], i_xv[use_series], i_xx[use_series] = _series(lam[use_series], u[use_series])
    return i_vv, i_xv, i_xx


@dataclass(frozen=True)
class OUMoments:
    """Means and covariance of ``(x_{s+u}, v_{s+u})`` given ``(x_s, v_s) = (a, b)``."""

    mu_x: np.ndarray
    mu_v: np.ndarray
    var_x: np.ndarray
    var_v: np.ndarray
    cov: np.ndarray
    s: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    schedule: TemperatureSchedule | None = field(default=None, repr=False)

    @property
    def sigma_x(self):
        return np.sqrt(self.var_x)

    @property
    def sigma_v(self):
        return np.sqrt(self.var_v)

    @property
    def rho(self):
        return self.cov / np.sqrt(self.var_x * self.var_v)

    @property
    def cond_var_x(self):
        """Variance of ``x`` given ``v``: ``(1 - rho^2) sigma_x^2``."""
        return self.var_x - self.cov * self.cov / self.var_v


def ou_second_moments(s, u, schedule: TemperatureSchedule):
    """``(var_x, var_v, cov)`` for start time ``s`` and elapsed time ``u``."""
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    st = kernel_integrals(0.0, u)
    K = schedule.excess * np.exp(-schedule.eta * s)
    var_v, cov, var_x = (2.0 * schedule.T_inf * i for i in st)
    if schedule.excess != 0.0:
        tr = kernel_integrals(schedule.eta, u)
        var_v = var_v + 2.0 * K * tr[0]
        cov = cov + 2.0 * K * tr[1]
        var_x = var_x + 2.0 * K * tr[2]
    return var_x, var_v, cov


def ou_moments(s, u, a, b, schedule: TemperatureSchedule) -> OUMoments:
    """Exact transition moments; all arguments broadcast elementwise."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("elapsed time must be positive")
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    var_x, var_v, cov = ou_second_moments(s, u, schedule)
    decay = np.exp(-u)
    mu_v = decay * b
    mu_x = a - np.expm1(-u) * b
    return OUMoments(mu_x, mu_v, var_x, var_v, cov, s, u, a, b, schedule)


def stationary_moments(u, T_inf: float) -> OUMoments:
    """Moments once the temperature transient has died out (``T(t) = T_inf``)."""
    return ou_moments(0.0, u, 0.0, 0.0, TemperatureSchedule.constant(T_inf))


def ou_joint_density(x, v, m: OUMoments):
    """Bivariate Gaussian density of ``(x, v)`` on the line."""
    return ou_conditional_density(x, v, m) * ou_marginal_v_density(v, m)


def _cond_mean(v, m: OUMoments):
    return m.mu_x + (m.cov / m.var_v) * (np.asarray(v, dtype=float) - m.mu_v)


def ou_conditional_density(x, v, m: OUMoments):
    """Density of ``x`` given ``v`` (unwrapped)."""
    mean = _cond_mean(v, m)
    var = m.cond_var_x
    z = np.asarray(x, dtype=float) - mean
    return np.exp(-0.5 * z * z / var) / np.sqrt(2.0 * math.pi * var)


def ou_marginal_v_density(v, m: OUMoments):
    z = np.asarray(v, dtype=float) - m.mu_v
    return np.exp(-0.5 * z * z / m.var_v) / np.sqrt(2.0 * math.pi * m.var_v)


def wrapped_gaussian(x, mean, var, L: float, rel_cut: float = 1e-16):
    """Sum of ``N(mean, var)`` over the images ``x + kL``.

    Uses the image sum when the standard deviation is below ``L`` and the
    equivalent Fourier series otherwise; either series is truncated once a
    symmetric pair of new terms is below ``rel_cut`` of the running sum.
    """
    x, mean, var = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (x, mean, var)))
    sd = np.sqrt(var)
    out = np.empty(x.shape)
    direct = sd <= L
    if np.any(direct):
        xd, md, vd = x[direct], mean[direct], var[direct]
        # start from the image nearest to the mean
        z0 = xd - md
        z0 = z0 - L * np.round(z0 / L)
        norm = 1.0 / np.sqrt(2.0 * math.pi * vd)
        total = norm * np.exp(-0.5 * z0 * z0 / vd)
        k = 1
        while True:
            zp, zm = z0 + k * L, z0 - k * L
            new = norm * (np.exp(-0.5 * zp * zp / vd) + np.exp(-0.5 * zm * zm / vd))
            total = total + new
            if np.all(new <= rel_cut * total):
                break
            k += 1
        out[direct] = total
    fourier = ~direct
    if np.any(fourier):
        xf, mf, vf = x[fourier], mean[fourier], var[fourier]
        phase = 2.0 * math.pi * (xf - mf) / L
        total = np.full(xf.shape, 1.0 / L)
        n = 1
        while True:
            amp = (2.0 / L) * np.exp(-2.0 * (math.pi * n / L) ** 2 * vf)
            total = total + amp * np.cos(n * phase)
            if np.all(amp <= rel_cut * np.abs(total)):
                break
            n += 1
        out[fourier] = total
    return out if out.ndim else float(out)


def wrapped_conditional_density(x, v, m: OUMoments, L: float):
    """Conditional density of the torus position given ``v``."""
    return wrapped_gaussian(x, _cond_mean(v, m), m.cond_var_x, L)


def wrapped_joint_density(x, v, m: OUMoments, L: float):
    return wrapped_conditional_density(x, v, m, L) * ou_marginal_v_density(v, m)


def ou_step_arrays(rng: np.random.Generator, s, u, x, v, schedule: TemperatureSchedule, L: float | None):
    """Exact transition of arrays of particles.

    ``x`` and ``v`` have shape ``(n,)`` or ``(n, d)``; ``s`` and ``u`` broadcast
    against the leading axis. Coordinates are independent given the schedule.
    Positions are wrapped to the torus when ``L`` is given.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("elapsed time must be positive")
    var_x, var_v, cov = ou_second_moments(s, u, schedule)
    if x.ndim == 2:
        var_x, var_v, cov = (np.asarray(q)[..., None] if np.ndim(q) else q for q in (var_x, var_v, cov))
        u = u[..., None] if u.ndim else u
    decay = np.exp(-u)
    mu_v = decay * v
    mu_x = x - np.expm1(-u) * v
    sd_v = np.sqrt(var_v)
    gain = cov / sd_v
    cond_sd = np.sqrt(np.maximum(var_x - cov * cov / var_v, 0.0))
    z1 = rng.standard_normal(x.shape)
    z2 = rng.standard_normal(x.shape)
    v_new = mu_v + sd_v * z1
    x_new = mu_x + gain * z1 + cond_sd * z2
    if L is not None:
        x_new = wrap_position(x_new, L)
    return x_new, v_new


def sample_ou_step(rng: np.random.Generator, s: float, u: float, point: PhasePoint,
                   schedule: TemperatureSchedule, L: float | None = None) -> PhasePoint:
    """One exact draw of the state ``u`` time units after ``point`` at time ``s``."""
    L = point.L if L is None else L
    x, v = ou_step_arrays(rng, s, u, point.x, point.v, schedule, L)
    return PhasePoint(x, v, L)


# -- large-time asymptotics ------------------------------------------------

def rho_hat(u):
    """Stationary-temperature correlation between position and velocity."""
    i_vv, i_xv, i_xx = kernel_integrals(0.0, np.asarray(u, dtype=float))
    return i_xv / np.sqrt(i_vv * i_xx)


def sigma_x_hat_sq(u, T_inf: float = 1.0):
    """Stationary-temperature position variance ``[4(e^-u - 1 + u) - (e^-2u - 1 + 2u)] T_inf``."""
    return 2.0 * T_inf * kernel_integrals(0.0, np.asarray(u, dtype=float))[2]


@dataclass
class BoundsReport:
    checks: dict[str, bool]
    violations: dict[str, list[float]]
    values: dict[str, float]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def __str__(self):
        lines = []
        for name, ok in self.checks.items():
            bad = self.violations.get(name, [])
            extra = f" first violating u={bad[0]:.4g} ({len(bad)} points)" if bad else ""
            lines.append(f"{'PASS' if ok else 'FAIL'} {name}{extra}")
        return "\n".join(lines)


def asymptotic_bounds_check(u_grid, T_inf: float = 1.0, tiny_u: float = 1e-6,
                            rho0_tol: float = 1e-3, limit_tol: float = 1e-2) -> BoundsReport:
    """Check the large-time correlation and position-variance bounds on ``u_grid``.

    Checks (with ``r = rho_hat``, ``q = sigma_x_hat^2 (1+2u)^2 / u^3``):

    * ``sandwich``: ``sqrt(3)/2 (5+u)^{-1/2} >= r >= (1/sqrt2) (5+u)^{-1/2}``
    * ``scaled_monotone``: ``r sqrt(1+u/5)`` decreasing, within ``limit_tol`` of
      ``1/sqrt(10)`` at the largest ``u``
    * ``variance_ratio``: ``8 T_inf >= q >= (2/3) T_inf`` and ``q`` increasing
    * ``small_u``: ``r(tiny_u) = sqrt(3)/2`` within ``rho0_tol``

    ``sandwich_upper_rescaled`` is reported as well: the upper bound with the
    ``(1+u/5)^{-1/2}`` scaling that the monotonicity statement implies.
    """
    u = np.asarray(u_grid, dtype=float)
    if np.any(u <= 0):
        raise ValueError("u grid must be positive")
    u = np.sort(u)
    r = rho_hat(u)
    upper = math.sqrt(3) / 2 / np.sqrt(5 + u)
    lower = 1 / math.sqrt(2) / np.sqrt(5 + u)
    upper_rescaled = math.sqrt(3) / 2 / np.sqrt(1 + u / 5)
    scaled = r * np.sqrt(1 + u / 5)
    q = sigma_x_hat_sq(u, T_inf) * (1 + 2 * u) ** 2 / u ** 3
    r0 = float(rho_hat(tiny_u))

    violations = {
        "sandwich": list(u[(r > upper) | (r < lower)]),
        "scaled_monotone": list(u[1:][np.diff(scaled) >= 0]),
        "variance_ratio": list(u[(q > 8 * T_inf) | (q < 2 / 3 * T_inf)]) + list(u[1:][np.diff(q) <= 0]),
        "small_u": [] if abs(r0 - math.sqrt(3) / 2) <= rho0_tol else [tiny_u],
        "sandwich_upper_rescaled": list(u[(r > upper_rescaled) | (r < lower)]),
    }
    limit_err = abs(scaled[-1] - 1 / math.sqrt(10))
    if limit_err > limit_tol:
        violations["scaled_monotone"].append(float(u[-1]))
    checks = {k: not bad for k, bad in violations.items()}
    values = {
        "rho_hat_small_u": r0,
        "scaled_rho_at_max_u": float(scaled[-1]),
        "limit_error": float(limit_err),
        "variance_ratio_min": float(q.min()),
        "variance_ratio_max": float(q.max()),
    }
    return BoundsReport(checks, violations, values)


# -- Doeblin minorization ---------------------------------------------------

def _single_image_bound(var_x, rho, L):
    a = (1.0 - rho * rho) * var_x
    return L / np.sqrt(2.0 * math.pi * a) * np.exp(-L * L / (8.0 * a))


def doeblin_lower_bound(eta: float, T_inf: float, L: float, s: float | None = None,
                        schedule: TemperatureSchedule | None = None, n_u: int = 401) -> float:
    """Coupling weight ``C`` with ``C / L <=`` wrapped conditional density.

    Keeps only the image within ``L/2`` of the conditional mean, giving
    ``(sigma_x sqrt(2 pi (1-rho^2)))^{-1} exp(-L^2 / (8 (1-rho^2) sigma_x^2))``,
    multiplied by ``L`` and minimized over ``u in [1/eta, 2/eta]``. Without a
    schedule the transient-free moments are used; with one, the exact moments
    at start time ``s``.
    """
    u = np.linspace(1.0 / eta, 2.0 / eta, n_u)
    if schedule is None:
        var_x, var_v, cov = ou_second_moments(0.0, u, TemperatureSchedule.constant(T_inf, eta))
    else:
        if s is None:
            raise ValueError("start time required with a schedule")
        var_x, var_v, cov = ou_second_moments(s, u, schedule)
    rho = cov / np.sqrt(var_x * var_v)
    return float(np.min(_single_image_bound(var_x, rho, L)))


def transient_onset(schedule: TemperatureSchedule, tol: float = 1e-6, n_u: int = 401) -> float:
    """Earliest start time after which transient terms are below ``tol`` relative.

    ``s_0 = ln(|T0 - T_inf| K / tol) / eta`` where ``K`` bounds the ratio of the
    transient kernel integrals to the stationary ones over ``u in [1/eta, 2/eta]``.
    """
    if schedule.excess == 0:
        return 0.0
    eta = schedule.eta
    u = np.linspace(1.0 / eta, 2.0 / eta, n_u)
    st = kernel_integrals(0.0, u)
    tr = kernel_integrals(eta, u)
    K = max(float(np.max(np.abs(t) / (schedule.T_inf * s))) for t, s in zip(tr, st))
    return max(0.0, math.log(abs(schedule.excess) * K / tol) / eta)
