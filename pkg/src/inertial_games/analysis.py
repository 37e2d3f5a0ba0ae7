"""Limits, transitions and comparative statics built on the kernel recursions."""

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .errors import ConfigError, DomainError, UnconvergedError
from .kernel import (
    GameConfig,
    _solve_step,
    aggregate_play,
    risk_dominant,
    threshold_path,
    threshold_step,
)
from .normal import cdf_nb, normal_cdf, normal_quantile, pdf_nb
from .processes import IID, Prefixed, Verdict, classify_growth, materialize

FROZEN_SCALE = 1e-13
FROZEN_RUN = 50
STABILITY_LAG = 100


@dataclass(frozen=True)
class LimitReport:
    mu_inf: float
    gamma_inf: float
    converged: bool
    periods_used: int
    last_step_size: float
    regime: str
    stability: float = math.nan
    monotone: bool = True
    max_residual: float = 0.0

    @property
    def mu_inf_estimate(self):
        return self.mu_inf

    @property
    def gamma_inf_estimate(self):
        return self.gamma_inf


@nb.njit(cache=True, nogil=True)
def _limit_chunk(g, A, tol, count, gam_out):
    """Advance the gamma recursion over one block of step scales.

    Returns ``(steps_done, status, frozen_count, monotone, max_residual)`` with
    status 0 (keep going), 1 (risk dominance) or 2 (frozen).
    """
    monotone = True
    max_res = 0.0
    for k in range(A.size):
        a = A[k]
        if a == 0.0:
            gn = g
        else:
            lo = min(0.0, g)
            hi = max(0.0, g)
            x0 = g - a * g / (a + pdf_nb(g))
            gn, r = _solve_step(a, cdf_nb(g), lo, hi, x0)
            if r > max_res:
                max_res = r
        step = abs(gn - g)
        if abs(gn) > abs(g):
            monotone = False
        g = gn
        gam_out[k] = g
        if abs(g) < tol:
            return k + 1, 1, count, monotone, max_res
        if a < FROZEN_SCALE * max(1.0, abs(g)) and step < tol * 1e-3:
            count += 1
            if count >= FROZEN_RUN:
                return k + 1, 2, count, monotone, max_res
        else:
            count = 0
    return A.size, 0, count, monotone, max_res


def _step_scales(spec, t0, t1, k):
    """``k * A_t`` for periods ``t0 .. t1 - 1`` (``t0 >= 2``)."""
    prec = spec.precisions(t0 - 1, t1)
    with np.errstate(divide="ignore"):
        e2 = 1.0 / prec
    return k * np.sqrt(e2[1:] + e2[:-1])


def limit_threshold(config, spec, tol=1e-10, T_max=100_000):
    """Run the gamma recursion until it reaches risk dominance, freezes, or hits ``T_max``.

    ``mu_inf`` is reported in units of theta, so with payoff scales it is the
    fundamental at which limit play switches.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    T_max = int(T_max)
    if T_max < 1:
        raise DomainError("T_max must be at least 1")
    prec1 = spec.precisions(1, 2)
    if not (prec1.size and math.isfinite(prec1[0]) and prec1[0] > 0):
        raise ConfigError("period 1 must carry a finite, positive precision")
    k = config.a / config.b
    g = normal_quantile(config.lambda0)
    history = np.array([g])
    t = 1
    status = 1 if abs(g) < tol else 0
    count = 0
    monotone = True
    max_res = 0.0
    prev = g
    chunk = 4096
    while status == 0 and t < T_max:
        t1 = min(t + 1 + chunk, T_max + 1)
        A = _step_scales(spec, t + 1, t1, k)
        if np.any(np.isnan(A)):
            raise ConfigError(f"invalid precision between t={t + 1} and t={t1 - 1}")
        out = np.empty(A.size)
        n, status, count, mono, res = _limit_chunk(g, A, tol, count, out)
        monotone &= mono
        max_res = max(max_res, res)
        prev = out[n - 2] if n >= 2 else g
        g = out[n - 1]
        history = np.concatenate((history, out[:n]))[-(STABILITY_LAG + 1):]
        t += n
        chunk = min(chunk * 2, 1 << 20)
    if t == 1:
        prev = g
    regime = {0: "unconverged", 1: "risk_dominant", 2: "frozen"}[status]
    stability = abs(history[-1] - history[0]) if history.size == STABILITY_LAG + 1 else math.nan
    mu = (config.c - config.b * normal_cdf(g)) / config.a
    return LimitReport(
        mu_inf=mu,
        gamma_inf=g,
        converged=status != 0,
        periods_used=t,
        last_step_size=abs(g - prev),
        regime=regime,
        stability=stability,
        monotone=monotone,
        max_residual=max_res,
    )


def limit_play(theta, report):
    """Limit aggregate play: 1 iff ``theta >= mu_inf`` (ties go to the risky action)."""
    if not report.converged:
        raise UnconvergedError(
            f"limit threshold did not converge after {report.periods_used} periods "
            f"(last step {report.last_step_size:.3g})"
        )
    return int(theta >= report.mu_inf)


def initial_play_dominant(theta, config):
    """Complete-information limit anchored to initial play."""
    return int(config.a * theta >= config.c - config.b * config.lambda0)


def _check_between(theta, config):
    lo, hi = sorted((config.c - config.lambda0, config.c - 0.5))
    if not (lo < theta < hi):
        raise DomainError(f"theta={theta!r} must lie strictly between {lo!r} and {hi!r}")


def _crossing_index(lam, lambda0):
    """Last period whose play sits on the initial-play side of 1/2 (0 if none).

    ``lambda_t >= 1/2`` exactly when ``theta >= mu_t``, so this is the last
    period before the thresholds pass theta.
    """
    side = lam >= 0.5 if lambda0 > 0.5 else lam < 0.5
    idx = np.flatnonzero(side)
    return int(idx[-1]) + 1 if idx.size else 0


def crossing_time(config, sigma, theta, T_max=10**7):
    """Period at which the threshold path passes ``theta`` under iid noise ``sigma``."""
    _check_between(theta, config)
    spec = IID(sigma)
    T = 1024
    while True:
        T = min(T, T_max)
        sched = materialize(spec, T)
        play = aggregate_play(theta, threshold_path(config, sched, T), sched)
        Tc = _crossing_index(play.lam, config.lambda0)
        if Tc < T:
            return Tc
        if T >= T_max:
            raise UnconvergedError(f"no crossing within {T_max} periods")
        T *= 4


@dataclass(frozen=True)
class TransitionReport:
    T_cross: int
    max_step: float
    regime: str
    epsilon: float
    alpha: float
    beta: float
    beta_bar: float
    step_bound: float = math.nan


def beta_bar(theta, c):
    return 1.0 + abs(c - 0.5 - theta) / 2.0


def default_beta(theta, c):
    return min(1.04, (1.0 + beta_bar(theta, c)) / 2.0)


def gradual_step_bound(theta, c, sigma):
    return ((math.sqrt(2.0) - 1.0) * (abs(theta) + c) + math.sqrt(2.0)) / (
        math.sqrt(2.0 * math.pi) * sigma
    )


def detect_transition(play, theta, config, epsilon=0.05, alpha=0.5, beta=None, sigma=None):
    """Classify a play path as a Sudden, Gradual or Mixed transition.

    Sudden is tested first.  ``sigma`` (iid noise level) only adds the
    analytic bound on per-period steps to the report.
    """
    theta = float(theta)
    if theta != play.theta:
        raise DomainError("theta does not match the play path")
    bb = beta_bar(theta, config.c)
    if beta is None:
        beta = default_beta(theta, config.c)
    if not 0.0 < epsilon < 0.5:
        raise DomainError(f"epsilon must lie in (0, 1/2), got {epsilon!r}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not 1.0 < beta < bb:
        raise DomainError(f"beta must lie in (1, {bb!r}), got {beta!r}")
    lam = np.asarray(play.lam)
    T = lam.size
    Tc = _crossing_index(lam, config.lambda0)
    t = np.arange(1, T + 1)
    max_step = float(np.max(np.abs(np.diff(lam)))) if T > 1 else 0.0
    nrd = initial_play_dominant(theta, config)
    rd = risk_dominant(theta, config)
    sudden = False
    if 0 < Tc < T:
        early = t <= alpha * Tc
        late = t >= beta * Tc
        sudden = (
            late.any()
            and bool(np.all(np.abs(lam[early] - nrd) < epsilon))
            and bool(np.all(np.abs(lam[late] - rd) < epsilon))
        )
    if sudden:
        regime = "Sudden"
    elif max_step < epsilon:
        regime = "Gradual"
    else:
        regime = "Mixed"
    bound = gradual_step_bound(theta, config.c, sigma) if sigma is not None else math.nan
    return TransitionReport(Tc, max_step, regime, epsilon, alpha, beta, bb, bound)


def _gap(config, spec, **kw):
    rep = limit_threshold(config, spec, **kw)
    if not rep.converged:
        raise UnconvergedError(f"limit threshold unconverged for {spec!r}")
    return abs(rep.mu_inf - config.steady_state)


@dataclass(frozen=True)
class InitialPlayPair:
    """Clause (i): ``lambda0`` is at most as extreme as ``lambda0_prime``."""

    c: float
    spec: object
    lambda0: float
    lambda0_prime: float


@dataclass(frozen=True)
class LearningSpeedPair:
    """Clause (ii): ``slow`` has elementwise larger signal variances than ``fast``."""

    config: GameConfig
    slow: object
    fast: object


@dataclass(frozen=True)
class SwapPair:
    """Clause (iii): ``spec`` with periods ``s > s_prime`` and the noisier signal at ``s``."""

    config: GameConfig
    spec: object
    s: int
    s_prime: int


@dataclass
class StaticsReport:
    checked: int = 0
    violations: list = field(default_factory=list)


def swap_periods(spec, s, s_prime):
    """Explicit-prefix spec with the signal variances at ``s`` and ``s_prime`` exchanged."""
    L = max(s, s_prime)
    base = spec.base if isinstance(spec, Prefixed) else spec
    head = list(spec.signal_variances(1, L + 1))
    if isinstance(spec, Prefixed) and len(spec.prefix) > L:
        head = list(spec.prefix)
    head[s - 1], head[s_prime - 1] = head[s_prime - 1], head[s - 1]
    return Prefixed(tuple(head), base)


def comparative_statics_harness(instances, slack=1e-8, horizon=400, **limit_kw):
    """Check every instance against its clause; returns the list of violations."""
    report = StaticsReport()
    for inst in instances:
        if isinstance(inst, InitialPlayPair):
            if abs(inst.lambda0 - 0.5) > abs(inst.lambda0_prime - 0.5):
                raise ConfigError("clause (i) needs |lambda0 - 1/2| <= |lambda0' - 1/2|")
            lhs = _gap(GameConfig(inst.c, inst.lambda0), inst.spec, **limit_kw)
            rhs = _gap(GameConfig(inst.c, inst.lambda0_prime), inst.spec, **limit_kw)
            clause = "i"
        elif isinstance(inst, LearningSpeedPair):
            slow = inst.slow.signal_variances(1, horizon + 1)
            fast = inst.fast.signal_variances(1, horizon + 1)
            if np.any(slow < fast * (1 - 1e-12)):
                raise ConfigError("clause (ii) needs slow variances >= fast variances")
            lhs = _gap(inst.config, inst.slow, **limit_kw)
            rhs = _gap(inst.config, inst.fast, **limit_kw)
            clause = "ii"
        elif isinstance(inst, SwapPair):
            if not inst.s > inst.s_prime >= 1:
                raise ConfigError("clause (iii) needs s > s' >= 1")
            v = inst.spec.signal_variances(1, inst.s + 1)
            if not v[inst.s - 1] >= v[inst.s_prime - 1]:
                raise ConfigError("clause (iii) needs the noisier signal at the later period")
            # Moving the precise signal later can only pull the limit toward risk dominance.
            lhs = _gap(inst.config, swap_periods(inst.spec, inst.s, inst.s_prime), **limit_kw)
            rhs = _gap(inst.config, inst.spec, **limit_kw)
            clause = "iii"
        else:
            raise ConfigError(f"unknown instance type {type(inst).__name__}")
        report.checked += 1
        if lhs > rhs + slack:
            report.violations.append((clause, inst, lhs, rhs))
    return report


@dataclass(frozen=True)
class PrefixCheck:
    passed: bool
    mu_inf: float
    report: LimitReport
    delay: int = 0


def prefix_irrelevance_check(config, spec, prefix, tol=1e-4, T_max=100_000, window_T=4096):
    """Replace the first ``len(prefix)`` signal variances and confirm the limit is unchanged."""
    prec = spec.precisions(1, window_T + 1)
    finite = np.isfinite(prec)
    if not finite.all():
        # Precision overflowing a double is as super-quadratic as it gets.
        window_T = max(int(np.argmin(finite)), 1)
    cls = classify_growth(materialize(spec, window_T))
    if cls.verdict is not Verdict.SUB_QUADRATIC:
        raise DomainError(f"prefix irrelevance needs a sub-quadratic process, got {cls.verdict.value}")
    prefix = [float(v) for v in prefix]
    # Leading uninformative periods only delay the game: play sits at its
    # initial level until the first signal, so the clock starts there.
    delay = 0
    while delay < len(prefix) and math.isinf(prefix[delay]):
        delay += 1
    prefix = prefix[delay:]
    modified = Prefixed(tuple(prefix), spec) if prefix else spec
    rep = limit_threshold(config, modified, T_max=T_max)
    return PrefixCheck(abs(rep.mu_inf - config.steady_state) <= tol, rep.mu_inf, rep, delay)


@dataclass(frozen=True)
class PhaseDiagram:
    rows: list
    boundary: dict
    converged: dict


def phase_diagram(spec, lambda0_grid, theta_grid, c=1.0, T_max=100_000, tol=1e-10):
    """Limit action on a (lambda0, theta) grid; the boundary is ``mu_inf(lambda0)``."""
    lambda0_grid = list(lambda0_grid)
    theta_grid = list(theta_grid)
    if not lambda0_grid or not theta_grid:
        raise DomainError("phase diagram grids must be non-empty")
    rows, boundary, conv = [], {}, {}
    for l0 in lambda0_grid:
        rep = limit_threshold(GameConfig(c, l0), spec, tol=tol, T_max=T_max)
        boundary[l0] = rep.mu_inf
        conv[l0] = rep.converged
        for th in theta_grid:
            rows.append((l0, th, int(th >= rep.mu_inf), rep.mu_inf))
    return PhaseDiagram(rows, boundary, conv)


def idsds_contemporaneous_cutoffs(eta, c, k_max=1000, tol=1e-10):
    """Iterate the best-reply cutoff map from both extremes.

    Returns ``(upper, lower)`` with ``upper[0] = c`` and ``lower[0] = c - 1``.
    """
    if not eta > 0:
        raise DomainError("eta must be positive")
    A = math.sqrt(2.0) * eta
    upper, lower = [float(c)], [float(c) - 1.0]
    for _ in range(int(k_max)):
        if abs(upper[-1] - lower[-1]) < tol:
            break
        upper.append(threshold_step(upper[-1], A, c))
        lower.append(threshold_step(lower[-1], A, c))
    return np.array(upper), np.array(lower)
