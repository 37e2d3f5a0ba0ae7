"""Synthesize a learning process whose limit threshold hits a prescribed target.

Step 1 chooses a gamma path that halves its distance to
``gamma* = Phi^-1(c - mu_target)`` every period and reads off the step
scales ``A_t`` that make it an equilibrium path.  Step 2 turns those scales
into posterior variances, and from there into signal variances.

Everything is computed for initial play above 1/2; targets below are mapped
through the reflection ``mu -> 2c - 1 - mu``, which leaves ``A`` unchanged
and flips the sign of gamma.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import limit_threshold
from .errors import (
    DesignVerificationError,
    DomainError,
    InfeasibleDesignError,
    RealizationError,
)
from .kernel import GameConfig
from .normal import normal_cdf, normal_pdf, normal_quantile
from .processes import Explicit

RATIO_LIMIT = math.sqrt(17.0 / 8.0)
A_FLOOR = 1e-16
SLACK_TOL = 1e-10
VERIFY_TOL = 1e-3

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
_GL_U = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True)
class DesignTarget:
    mu_target: float
    lambda0: float
    c: float = 1.0

    def __post_init__(self):
        for name in ("mu_target", "lambda0", "c"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if not 0.0 < self.lambda0 < 1.0:
            raise DomainError("lambda0 must lie in (0, 1)")
        lo, hi = sorted((self.c - self.lambda0, self.c - 0.5))
        if not lo < self.mu_target < hi:
            raise DomainError(
                f"target {self.mu_target!r} must lie strictly between {lo!r} and {hi!r}"
            )

    @property
    def reflected(self):
        return self.lambda0 < 0.5

    def oriented(self):
        """``(lambda0, mu_target)`` in the orientation with initial play above 1/2."""
        if self.reflected:
            return 1.0 - self.lambda0, 2.0 * self.c - 1.0 - self.mu_target
        return self.lambda0, self.mu_target


@dataclass(frozen=True, eq=False)
class ASequence:
    """Designed step scales; ``A[k]`` belongs to period ``k + 1`` and ``A[0]`` is NaN."""

    gamma_star: float
    gamma1: float
    gamma2: float
    gamma: np.ndarray
    A: np.ndarray
    truncation_index: int
    tail_bound: float
    c_lower: float
    C_upper: float
    diagnostics: dict


@dataclass(frozen=True, eq=False)
class Realization:
    eta2: np.ndarray
    sigma2: np.ndarray
    eta1_sq: float
    diagnostics: dict


@dataclass(frozen=True, eq=False)
class DesignResult:
    target: DesignTarget
    gamma_star: float
    gamma2: float
    gamma: np.ndarray
    A: np.ndarray
    truncation_index: int
    tail_bound: float
    eta1_sq: float
    eta2: np.ndarray
    sigma2: np.ndarray
    achieved_mu_inf: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def spec(self):
        return Explicit(tuple(self.sigma2.tolist()))


def _a_gamma1(g1, g):
    return (normal_cdf(g1) - normal_cdf(g)) / g


def _a_gamma_star(gs, g):
    m = 0.5 * (gs + g)
    return (normal_cdf(g) - normal_cdf(m)) / m


def _conditions(gs, g1, g):
    scale_ok = _a_gamma1(g1, g) > math.sqrt(2.0) * _a_gamma_star(gs, g)
    ratio = (normal_pdf(gs) / gs) / (normal_pdf(g) / g)
    return scale_ok and ratio <= RATIO_LIMIT


def choose_gamma2(gs, g1):
    """Halve the distance to ``gamma*`` until both sufficient conditions hold,
    then move 10% closer for margin."""
    d = 0.5 * (g1 - gs)
    while d >= 1e-14:
        g = gs + d
        if _conditions(gs, g1, g):
            g_margin = gs + 0.9 * d
            return g_margin if _conditions(gs, g1, g_margin) else g
        d *= 0.5
    raise InfeasibleDesignError(f"no admissible gamma2 between {gs!r} and {g1!r}")


def _cdf_increment(gs, d):
    """``Phi(gs + 2d) - Phi(gs + d)`` without cancellation."""
    x = gs + d * (1.0 + _GL_U)
    return d * float(np.dot(_GL_W, np.exp(-0.5 * x * x))) / math.sqrt(2.0 * math.pi)


def design_A_sequence(target):
    """Step 1: step scales under which the gamma path halves its gap to ``gamma*``."""
    l0, mu = target.oriented()
    gs = normal_quantile(target.c - mu)
    g1 = normal_quantile(l0)
    g2 = choose_gamma2(gs, g1)
    d2 = g2 - gs
    gam = [g1, g2]
    A = [math.nan, _a_gamma1(g1, g2)]
    t = 3
    while True:
        d = d2 * 2.0 ** (2 - t)
        gt = gs + d
        At = _cdf_increment(gs, d) / gt
        if At < A_FLOOR:
            break
        gam.append(gt)
        A.append(At)
        t += 1
    A = np.array(A)
    gam = np.array(gam)
    N = A.size
    c_lo = 4.0 * (normal_pdf(g2) / g2) * d2
    C_hi = 4.0 * (normal_pdf(gs) / gs) * d2
    tt = np.arange(1, N + 1, dtype=float)
    sq = A[1:] ** 2
    convexity = (sq[:-2] - sq[1:-1]) - (sq[1:-1] - sq[2:]) if sq.size >= 3 else np.zeros(0)
    diag = {
        "ratio": C_hi / c_lo,
        "ratio_limit": RATIO_LIMIT,
        "A2_margin": A[1] - math.sqrt(2.0) * _a_gamma_star(gs, g2),
        "sandwich_ok": bool(
            np.all(A[2:] >= c_lo * 2.0 ** -tt[2:] * (1 - 1e-12))
            and np.all(A[2:] <= C_hi * 2.0 ** -tt[2:] * (1 + 1e-12))
        ),
        "convexity_margin": float(convexity.min()) if convexity.size else 0.0,
    }
    sign = -1.0 if target.reflected else 1.0
    return ASequence(
        gamma_star=sign * gs,
        gamma1=sign * g1,
        gamma2=sign * g2,
        gamma=sign * gam,
        A=A,
        truncation_index=N,
        tail_bound=C_hi * 2.0 ** -N,
        c_lower=c_lo,
        C_upper=C_hi,
        diagnostics=diag,
    )


def _eta1_series(A):
    """``sum_s (A_{2s}^2 - A_{2s+1}^2)`` with the last scale held constant."""
    sq = A[1:] ** 2
    total = 0.0
    for k in range(0, sq.size - 1, 2):
        term = sq[k] - sq[k + 1]
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    else:
        if sq.size % 2 == 1:
            total += 0.5 * sq[-1]
    return total


def realize_noise_process(A):
    """Step 2: posterior and signal variances that induce the step scales ``A``.

    ``A[k]`` is the scale of period ``k + 1`` (``A[0]`` is ignored).  Beyond
    the last listed period the scale is held constant, which pins
    ``eta_N^2 = A_N^2 / 2``; earlier variances follow from
    ``eta_t^2 = A_{t+1}^2 - eta_{t+1}^2``, run backwards so the alternating
    sums never cancel catastrophically.
    """
    A = np.asarray(A, dtype=float)
    N = A.size
    if N < 2:
        raise DomainError("need at least one step scale (periods 1 and 2)")
    if np.any(~(A[1:] > 0)):
        raise DomainError("step scales must be positive")
    sq = A ** 2
    eta2 = np.empty(N)
    eta2[-1] = 0.5 * sq[-1]
    for k in range(N - 2, -1, -1):
        eta2[k] = sq[k + 1] - eta2[k + 1]
    eta1 = eta2[0]

    # Each constraint 0 <= eta_{t+1}^2 <= eta_t^2 is a bound on eta_1^2.
    P = 0.0
    lower, upper = -math.inf, math.inf
    slack = np.empty(N - 1)
    for k in range(1, N):
        P = sq[k] - P
        s = 1.0 if k % 2 == 0 else -1.0
        b_zero, b_half = -s * P, s * (0.5 * sq[k] - P)
        lo_k, hi_k = (b_zero, b_half) if s > 0 else (b_half, b_zero)
        lower, upper = max(lower, lo_k), min(upper, hi_k)
        slack[k - 1] = min(eta1 - lo_k, hi_k - eta1)
    bad = np.flatnonzero(slack < -SLACK_TOL)
    if bad.size:
        t = int(bad[0]) + 2
        raise RealizationError(f"posterior variance constraint violated at t={t}", t=t)

    prec = 1.0 / np.maximum(eta2, 0.0)
    if not np.all(np.isfinite(prec)):
        t = int(np.argmax(~np.isfinite(prec))) + 1
        raise RealizationError(f"posterior variance vanishes at t={t}", t=t)
    inc = np.diff(prec, prepend=0.0)
    neg = inc < 0
    if np.any(neg & (inc < -1e-12 * prec)):
        t = int(np.argmax(neg & (inc < -1e-12 * prec))) + 1
        raise RealizationError(f"negative signal precision at t={t}", t=t)
    inc = np.where(neg, 0.0, inc)
    with np.errstate(divide="ignore"):
        sigma2 = np.where(inc > 0, 1.0 / np.where(inc > 0, inc, 1.0), np.inf)
    eta2 = 1.0 / np.cumsum(inc)

    A_back = np.sqrt(eta2[1:] + eta2[:-1])
    diag = {
        "min_slack": float(slack.min()) if slack.size else math.inf,
        "slack": slack,
        "lower": lower,
        "upper": upper,
        "series_eta1_sq": _eta1_series(A),
        "max_rel_A_error": float(np.max(np.abs(A_back / A[1:] - 1.0))),
        "clipped": int(np.count_nonzero(neg)),
    }
    return eta2, sigma2, eta1, diag


def design_process(target, verify_T=400):
    """Steps 1 and 2 plus a forward check that the limit threshold hits the target."""
    seq = design_A_sequence(target)
    eta2, sigma2, eta1, rdiag = realize_noise_process(seq.A)
    spec = Explicit(tuple(sigma2.tolist()))
    rep = limit_threshold(GameConfig(target.c, target.lambda0), spec, T_max=verify_T)
    miss = abs(rep.mu_inf - target.mu_target)
    if miss > VERIFY_TOL:
        raise DesignVerificationError(
            f"achieved {rep.mu_inf!r} misses target {target.mu_target!r} by {miss:.3g}"
        )
    diag = dict(seq.diagnostics)
    diag.update({k: v for k, v in rdiag.items() if k != "slack"})
    diag["slack"] = rdiag["slack"]
    diag["eta1_sq_lower_bound"] = (seq.c_lower**2 - seq.C_upper**2 / 4.0) / 15.0
    diag["c_lower"] = seq.c_lower
    diag["C_upper"] = seq.C_upper
    diag["verify_periods"] = rep.periods_used
    diag["verify_regime"] = rep.regime
    diag["miss"] = miss
    return DesignResult(
        target=target,
        gamma_star=seq.gamma_star,
        gamma2=seq.gamma2,
        gamma=seq.gamma,
        A=seq.A,
        truncation_index=seq.truncation_index,
        tail_bound=seq.tail_bound,
        eta1_sq=eta1,
        eta2=eta2,
        sigma2=sigma2,
        achieved_mu_inf=rep.mu_inf,
        diagnostics=diag,
    )
