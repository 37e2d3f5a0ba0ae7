"""Per-period equilibrium recursions.

Every period's belief threshold solves ``mu + Phi((mu - mu_prev) / A) = c``.
We never solve that equation in ``mu`` directly: writing
``mu = mu_prev + A * g`` turns it into ``A * g + Phi(g) = c - mu_prev``, whose
derivative ``A + phi(g)`` stays bounded away from zero however small ``A``
gets.  The normalised step ``g`` is exactly the ``gamma`` of the companion
recursion, so both recursions share one bracketed solver.
"""

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .errors import DomainError, LengthError
from .normal import cdf_nb, normal_cdf_array, normal_quantile, pdf_nb

ROOT_TOL = 1e-12


@dataclass(frozen=True)
class GameConfig:
    """Payoff primitives.

    The risky action pays ``a * theta + b * lambda_{t-1}``, the safe one
    pays ``c``.
    """

    c: float
    lambda0: float
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        for name in ("c", "lambda0", "a", "b"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise DomainError(f"{name} must be a finite real, got {value!r}")
            object.__setattr__(self, name, float(value))
        if not 0.0 < self.lambda0 < 1.0:
            raise DomainError(f"lambda0 must lie in (0, 1), got {self.lambda0!r}")
        if self.a <= 0.0 or self.b <= 0.0:
            raise DomainError("payoff scales a and b must be strictly positive")

    @property
    def normalized(self):
        return self.a == 1.0 and self.b == 1.0

    @property
    def steady_state(self):
        """Threshold fixed point ``(c - b/2) / a`` (``c - 1/2`` when normalised)."""
        return (self.c - 0.5 * self.b) / self.a


@dataclass(frozen=True, eq=False)
class PosteriorSchedule:
    """Posterior variances induced by a learning process.

    Arrays are indexed from period 1 at position 0.  ``precision`` is the
    cumulative precision ``1 / eta2`` and is the primary representation;
    ``A[0]`` is undefined (NaN) because the step scale starts in period 2.
    """

    precision: np.ndarray
    sigma2: np.ndarray
    times: np.ndarray = field(default=None)

    def __post_init__(self):
        prec = np.asarray(self.precision, dtype=float)
        sig = np.asarray(self.sigma2, dtype=float)
        if prec.ndim != 1 or sig.shape != prec.shape:
            raise LengthError("precision and sigma2 must be 1-d and aligned")
        if prec.size and (not np.all(np.isfinite(prec)) or np.any(prec <= 0)):
            raise DomainError("posterior precisions must be positive and finite")
        if prec.size > 1 and np.any(np.diff(prec) < 0):
            t = int(np.argmax(np.diff(prec) < 0)) + 2
            raise DomainError(f"posterior precision decreases at t={t}")
        if np.any(sig <= 0) or np.any(np.isnan(sig)):
            raise DomainError("signal variances must lie in (0, inf]")
        times = self.times
        if times is None:
            times = np.arange(1, prec.size + 1, dtype=float)
        times = np.asarray(times, dtype=float)
        if times.shape != prec.shape:
            raise LengthError("times must align with precision")
        for name, arr in (("precision", prec), ("sigma2", sig), ("times", times)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_sigma2(cls, sigma2):
        sig = np.asarray(sigma2, dtype=float)
        if np.any(sig <= 0) or np.any(np.isnan(sig)):
            raise DomainError("signal variances must lie in (0, inf]")
        return cls(np.cumsum(1.0 / sig), sig)

    @classmethod
    def from_precision(cls, precision, times=None):
        prec = np.asarray(precision, dtype=float)
        inc = np.diff(prec, prepend=0.0)
        with np.errstate(divide="ignore"):
            sig = np.where(inc > 0, 1.0 / np.where(inc > 0, inc, 1.0), np.inf)
        return cls(prec, sig, times)

    def __len__(self):
        return int(self.precision.size)

    @property
    def eta2(self):
        return 1.0 / self.precision

    @property
    def eta(self):
        return np.sqrt(self.eta2)

    @property
    def A(self):
        e2 = self.eta2
        out = np.full(e2.shape, np.nan)
        out[1:] = np.sqrt(e2[1:] + e2[:-1])
        return out

    def head(self, T):
        if T > len(self):
            raise LengthError(f"schedule covers {len(self)} periods, {T} requested")
        return PosteriorSchedule(self.precision[:T], self.sigma2[:T], self.times[:T])


@dataclass(frozen=True, eq=False)
class ThresholdPath:
    """Belief thresholds, normalised steps and per-step solver residuals."""

    mu_star: np.ndarray
    gamma: np.ndarray
    residuals: np.ndarray

    def __len__(self):
        return int(self.mu_star.size)


@dataclass(frozen=True, eq=False)
class PlayPath:
    theta: float
    lam: np.ndarray

    def __len__(self):
        return int(self.lam.size)


@nb.njit(cache=True, nogil=True)
def _solve_step(A, rhs, lo, hi, x0):
    """Root of ``A*x + Phi(x) = rhs`` on ``[lo, hi]``; returns ``(x, |residual|)``.

    Safeguarded Newton: a Newton iterate that leaves the current bracket is
    replaced by the bisection midpoint.  Iterates until the step reaches the
    rounding level of the residual, far below ``ROOT_TOL``, because
    late-period steps are themselves ~1e-14.
    """
    x = x0
    if not (lo <= x <= hi):
        x = 0.5 * (lo + hi)
    for _ in range(200):
        h = A * x + cdf_nb(x) - rhs
        if h == 0.0:
            return x, 0.0
        if h < 0.0:
            lo = x
        else:
            hi = x
        slope = A + pdf_nb(x)
        xn = x - h / slope
        if not (lo <= xn <= hi):
            xn = 0.5 * (lo + hi)
        step = abs(xn - x)
        x = xn
        # Rounding in h moves Newton by about this much; iterating further only chases noise.
        noise = 2.3e-16 * (abs(rhs) + abs(A * x)) / slope
        if step <= max(4.4e-16 * abs(x), noise) or step < 1e-300:
            break
        if hi - lo <= 4.4e-16 * max(abs(lo), abs(hi)):
            break
    return x, abs(A * x + cdf_nb(x) - rhs)


@nb.njit(cache=True, nogil=True)
def _bracket(A, rhs, g_hint):
    """Bracket for ``A*x + Phi(x) = rhs`` around the interval ``[0, g_hint]``."""
    pad = 1e-9 * (1.0 + abs(g_hint))
    lo = min(0.0, g_hint) - pad
    hi = max(0.0, g_hint) + pad
    if A * lo + cdf_nb(lo) - rhs <= 0.0 and A * hi + cdf_nb(hi) - rhs >= 0.0:
        return lo, hi
    # Phi in (0, 1) bounds the root whatever the hint was.
    return (rhs - 1.0) / A, rhs / A


@nb.njit(cache=True, nogil=True)
def _threshold_loop(nu1, gamma1, A, c, a, b, mu, gam, res):
    """Fill threshold arrays for periods 1..len(mu); ``A[k]`` is period k+1's scale."""
    mu[0] = nu1
    gam[0] = gamma1
    res[0] = 0.0
    g = gamma1
    for k in range(1, mu.size):
        scale = a * A[k] / b
        rhs = (c - a * mu[k - 1]) / b
        # In exact arithmetic the root lies in [0, g_prev]; rounding in rhs can
        # push it a hair outside, in which case the nearer endpoint is the answer.
        lo = min(0.0, g)
        hi = max(0.0, g)
        h_lo = scale * lo + cdf_nb(lo) - rhs
        h_hi = scale * hi + cdf_nb(hi) - rhs
        if h_lo >= 0.0:
            g, r = lo, abs(h_lo)
        elif h_hi <= 0.0:
            g, r = hi, abs(h_hi)
        else:
            x0 = g - scale * g / (scale + pdf_nb(g))
            g, r = _solve_step(scale, rhs, lo, hi, x0)
        mu[k] = mu[k - 1] + A[k] * g
        gam[k] = g
        res[k] = r


@nb.njit(cache=True, nogil=True)
def _gamma_loop(gamma1, A, gam, res):
    """Companion recursion ``A_t g_t = Phi(g_{t-1}) - Phi(g_t)``."""
    gam[0] = gamma1
    res[0] = 0.0
    g = gamma1
    for k in range(1, gam.size):
        if g == 0.0:
            gam[k] = 0.0
            res[k] = 0.0
            continue
        rhs = cdf_nb(g)
        lo = min(0.0, g)
        hi = max(0.0, g)
        x0 = g - A[k] * g / (A[k] + pdf_nb(g))
        g, r = _solve_step(A[k], rhs, lo, hi, x0)
        gam[k] = g
        res[k] = r


def _check_scale(A):
    A = float(A)
    if not (A > 0.0) or not math.isfinite(A):
        raise DomainError(
            f"step scale A must be positive and finite, got {A!r} "
            "(use simulate_complete_info for perfect learning)"
        )
    return A


def _solve_scalar(A, rhs, hint):
    lo, hi = _bracket(A, rhs, hint)
    x0 = min(max(hint, lo), hi)
    return _solve_step(A, rhs, lo, hi, x0)


def threshold_step(mu_prev, A, c):
    """Next belief threshold: the ``mu`` solving ``mu + Phi((mu - mu_prev)/A) = c``."""
    A = _check_scale(A)
    rhs = float(c) - float(mu_prev)
    hint = normal_quantile(rhs) if 0.0 < rhs < 1.0 else 0.0
    g, _ = _solve_scalar(A, rhs, hint)
    return float(mu_prev) + A * g


def gamma_step(gamma_prev, A):
    """Next normalised step: the ``g`` solving ``A*g = Phi(gamma_prev) - Phi(g)``."""
    A = _check_scale(A)
    gamma_prev = float(gamma_prev)
    if gamma_prev == 0.0:
        return 0.0
    g, _ = _solve_scalar(A, cdf_nb(gamma_prev), gamma_prev)
    return g


def initial_threshold(config):
    return (config.c - config.b * config.lambda0) / config.a


def threshold_path(config, schedule, T):
    """Thresholds for periods 1..T.

    With non-unit payoff scales the path is in units of ``theta`` and solves
    ``a*mu + b*Phi((mu - mu_prev)/A) = c`` directly.
    """
    T = int(T)
    if T < 0:
        raise LengthError("T must be non-negative")
    if T > len(schedule):
        raise LengthError(f"schedule covers {len(schedule)} periods, T={T} requested")
    mu = np.empty(T)
    gam = np.empty(T)
    res = np.empty(T)
    if T:
        A = schedule.A[:T]
        _threshold_loop(
            initial_threshold(config), normal_quantile(config.lambda0), A,
            config.c, config.a, config.b, mu, gam, res,
        )
    return ThresholdPath(mu, gam, res)


def gamma_path(lambda0, A):
    """Companion ``gamma`` recursion driven by step scales ``A`` (``A[0]`` unused)."""
    A = np.asarray(A, dtype=float)
    gam = np.empty(A.size)
    res = np.empty(A.size)
    if A.size:
        if np.any(~(A[1:] > 0)):
            raise DomainError("step scales must be positive")
        _gamma_loop(normal_quantile(lambda0), A, gam, res)
    return gam, res


def aggregate_play(theta, path, schedule):
    """Population share ``Phi((theta - mu_t) / eta_t)`` taking the risky action."""
    T = len(path)
    if T > len(schedule):
        raise LengthError("threshold path is longer than the schedule")
    eta = np.sqrt(1.0 / schedule.precision[:T])
    lam = normal_cdf_array((float(theta) - path.mu_star) / eta)
    return PlayPath(float(theta), lam)


def simulate_complete_info(theta, lambda0, c, T):
    """Play when the state is common knowledge from period 1 on.

    Ties (``theta + lambda_{t-1} == c``) go to the risky action.
    """
    lam = np.empty(int(T))
    prev = float(lambda0)
    for k in range(lam.size):
        prev = 1.0 if theta + prev >= c else 0.0
        lam[k] = prev
    return PlayPath(float(theta), lam)


def risk_dominant(theta, config):
    """1 if the risky action is a best reply to a 50/50 conjecture at known theta."""
    return int(config.a * theta >= config.c - 0.5 * config.b)
