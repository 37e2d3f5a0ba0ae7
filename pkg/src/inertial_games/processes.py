"""Learning processes and the transformations that act on them.

A learning process is described by its cumulative posterior precision
``eta_t^{-2}``.  Every spec can generate precisions for an arbitrary block of
periods, which lets long-horizon analyses stream the schedule in chunks
instead of materialising ``T_max`` periods at once.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidSpecError, LengthError
from .kernel import GameConfig, PosteriorSchedule
from .normal import normal_pdf, normal_quantile


def _positive(name, value):
    value = float(value)
    if not (value > 0.0) or not math.isfinite(value):
        raise InvalidSpecError(f"{name} must be positive and finite, got {value!r}")
    return value


class LearningSpec:
    """Base class.  Subclasses implement :meth:`precisions` and :meth:`scaled`."""

    def precisions(self, t0, t1):
        """Cumulative precisions for periods ``t0 .. t1 - 1`` (1-based)."""
        raise NotImplementedError

    def scaled(self, k):
        """Spec whose signal standard deviations are multiplied by ``k``."""
        raise NotImplementedError

    def signal_variances(self, t0, t1):
        prec = self.precisions(max(t0 - 1, 1), t1)
        if t0 == 1:
            prec = np.concatenate(([0.0], prec))
        inc = np.diff(prec)
        with np.errstate(divide="ignore"):
            return np.where(inc > 0, 1.0 / np.where(inc > 0, inc, 1.0), np.inf)

    def to_dict(self):
        out = {"kind": type(self).__name__}
        for key, value in self.__dict__.items():
            out[key] = list(value) if isinstance(value, tuple) else value
        return out


@dataclass(frozen=True)
class IID(LearningSpec):
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))

    def precisions(self, t0, t1):
        return np.arange(t0, t1, dtype=float) / self.sigma**2

    def signal_variances(self, t0, t1):
        return np.full(max(t1 - t0, 0), self.sigma**2)

    def scaled(self, k):
        return IID(self.sigma * k)


@dataclass(frozen=True)
class OneShot(LearningSpec):
    """A single signal in period 1, nothing afterwards."""

    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))

    def precisions(self, t0, t1):
        return np.full(max(t1 - t0, 0), 1.0 / self.sigma**2)

    def scaled(self, k):
        return OneShot(self.sigma * k)


@dataclass(frozen=True)
class SocialDoubling(LearningSpec):
    """Posterior precision doubles every period: ``sigma^-2 * 2^(t-1)``."""

    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))

    def precisions(self, t0, t1):
        t = np.arange(t0, t1)
        with np.errstate(over="ignore"):
            return np.ldexp(1.0 / self.sigma**2, t - 1)

    def scaled(self, k):
        return SocialDoubling(self.sigma * k)


@dataclass(frozen=True)
class PowerPrecision(LearningSpec):
    """``eta_t^{-2} = C * t^p``."""

    C: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "C", _positive("C", self.C))
        p = float(self.p)
        if not (p >= 0.0) or not math.isfinite(p):
            raise InvalidSpecError(f"exponent p must be finite and >= 0, got {p!r}")
        object.__setattr__(self, "p", p)

    def precisions(self, t0, t1):
        with np.errstate(over="ignore"):
            return self.C * np.arange(t0, t1, dtype=float) ** self.p

    def scaled(self, k):
        return PowerPrecision(self.C / k**2, self.p)


@dataclass(frozen=True)
class GeometricPrecision(LearningSpec):
    """``eta_t^{-2} = C * r^t`` with ``r > 1``."""

    C: float
    r: float

    def __post_init__(self):
        object.__setattr__(self, "C", _positive("C", self.C))
        r = float(self.r)
        if not (r > 1.0) or not math.isfinite(r):
            raise InvalidSpecError(f"ratio r must be finite and > 1, got {r!r}")
        object.__setattr__(self, "r", r)

    def precisions(self, t0, t1):
        t = np.arange(t0, t1, dtype=float)
        with np.errstate(over="ignore"):
            return self.C * np.exp(t * math.log(self.r))

    def scaled(self, k):
        return GeometricPrecision(self.C / k**2, self.r)


@dataclass(frozen=True)
class Explicit(LearningSpec):
    """Listed signal variances; periods past the list use ``tail`` (``inf``: no signal)."""

    sigma2: tuple
    tail: float = math.inf

    def __post_init__(self):
        vals = tuple(float(v) for v in self.sigma2)
        for i, v in enumerate(vals):
            if not (v > 0.0):
                raise InvalidSpecError(f"signal variance must lie in (0, inf], got {v!r}", t=i + 1)
        tail = float(self.tail)
        if not (tail > 0.0):
            raise InvalidSpecError(f"tail variance must lie in (0, inf], got {tail!r}")
        object.__setattr__(self, "sigma2", vals)
        object.__setattr__(self, "tail", tail)
        object.__setattr__(self, "_prefix", np.cumsum(1.0 / np.asarray(vals, dtype=float)))

    def __eq__(self, other):
        return isinstance(other, Explicit) and (self.sigma2, self.tail) == (other.sigma2, other.tail)

    def __hash__(self):
        return hash((self.sigma2, self.tail))

    def precisions(self, t0, t1):
        t = np.arange(t0, t1)
        L = len(self.sigma2)
        out = np.empty(t.size)
        head = t <= L
        out[head] = self._prefix[t[head] - 1]
        last = self._prefix[-1] if L else 0.0
        out[~head] = last + (t[~head] - L) / self.tail
        return out

    def signal_variances(self, t0, t1):
        t = np.arange(t0, t1)
        L = len(self.sigma2)
        s = np.asarray(self.sigma2 + (self.tail,), dtype=float)
        return s[np.minimum(t, L + 1) - 1]

    def scaled(self, k):
        return Explicit(tuple(v * k * k for v in self.sigma2), self.tail * k * k)

    def to_dict(self):
        return {"kind": "Explicit", "sigma2": list(self.sigma2), "tail": self.tail}


@dataclass(frozen=True)
class Prefixed(LearningSpec):
    """``base`` with its first ``len(prefix)`` signal variances overridden."""

    prefix: tuple
    base: LearningSpec

    def __post_init__(self):
        vals = tuple(float(v) for v in self.prefix)
        for i, v in enumerate(vals):
            if not (v > 0.0):
                raise InvalidSpecError(f"signal variance must lie in (0, inf], got {v!r}", t=i + 1)
        object.__setattr__(self, "prefix", vals)
        object.__setattr__(self, "_head", Explicit(vals))

    def precisions(self, t0, t1):
        L = len(self.prefix)
        t0_tail = max(t0, L + 1)
        head = self._head.precisions(t0, min(t1, L + 1))
        if t1 <= t0_tail:
            return head
        offset = self._head.precisions(L, L + 1)[0] if L else 0.0
        base_L = self.base.precisions(L, L + 1)[0] if L else 0.0
        tail = offset + (self.base.precisions(t0_tail, t1) - base_L)
        return np.concatenate((head, tail))

    def scaled(self, k):
        return Prefixed(tuple(v * k * k for v in self.prefix), self.base.scaled(k))

    def to_dict(self):
        return {"kind": "Prefixed", "prefix": list(self.prefix), "base": self.base.to_dict()}


@dataclass(frozen=True)
class PastPlaySpec:
    """State-signal variances ``sigma2`` (from t = 1) and past-play-signal
    variances ``tau2`` (from t = 2)."""

    sigma2: tuple
    tau2: tuple

    def __post_init__(self):
        s = tuple(float(v) for v in self.sigma2)
        tau = tuple(float(v) for v in self.tau2)
        if any(not (v > 0.0) for v in s + tau):
            raise InvalidSpecError("variances must lie in (0, inf]")
        object.__setattr__(self, "sigma2", s)
        object.__setattr__(self, "tau2", tau)


def _validate_precisions(prec, t0):
    bad = ~np.isfinite(prec)
    if bad.any():
        t = int(np.argmax(bad)) + t0
        raise InvalidSpecError(f"posterior precision is not finite at t={t}", t=t)
    if t0 == 1 and prec.size and not prec[0] > 0:
        raise InvalidSpecError("period 1 carries no information (zero precision)", t=1)
    dec = np.diff(prec) < 0
    if dec.any():
        t = int(np.argmax(dec)) + t0 + 1
        raise InvalidSpecError(f"posterior precision decreases at t={t}", t=t)


def materialize(spec, T):
    """Posterior schedule for periods 1..T."""
    T = int(T)
    if T < 1:
        raise LengthError("T must be at least 1")
    prec = spec.precisions(1, T + 1)
    _validate_precisions(prec, 1)
    return PosteriorSchedule(prec, spec.signal_variances(1, T + 1))


class Verdict(str, enum.Enum):
    SUB_QUADRATIC = "SubQuadratic"
    SUPER_QUADRATIC = "SuperQuadratic"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class GrowthClass:
    verdict: Verdict
    exponent: float
    superpolynomial: bool
    window: tuple


def _loglog_slope(t, prec):
    return float(np.polyfit(np.log(t), np.log(prec), 1)[0])


def classify_growth(schedule, window=None, delta=0.15):
    """Compare the growth of ``eta_t^{-2}`` with ``t^2``.

    ``window`` is an inclusive 1-based period range; the default is the last
    half of the schedule.
    """
    T = len(schedule)
    if window is None:
        window = (T // 2 + 1, T)
    lo, hi = int(window[0]), int(window[1])
    if lo < 1 or hi > T:
        raise LengthError(f"window {window} exceeds the schedule's {T} periods")
    if hi - lo + 1 < 8:
        raise LengthError("classification window must cover at least 8 periods")
    if not delta > 0:
        raise DomainError("delta must be positive")
    t = schedule.times[lo - 1:hi]
    prec = schedule.precision[lo - 1:hi]
    slope = _loglog_slope(t, prec)
    mid = t.size // 2
    bend = _loglog_slope(t[mid:], prec[mid:]) - _loglog_slope(t[:mid + 1], prec[:mid + 1])
    if bend > 0.5:
        return GrowthClass(Verdict.SUPER_QUADRATIC, math.inf, True, (lo, hi))
    if slope <= 2.0 - delta:
        verdict = Verdict.SUB_QUADRATIC
    elif slope >= 2.0 + delta:
        verdict = Verdict.SUPER_QUADRATIC
    else:
        verdict = Verdict.INDETERMINATE
    return GrowthClass(verdict, slope, False, (lo, hi))


def _zeta_tail(r, start=2, M=1000):
    """``sum_{t >= start} t^-r`` via a partial sum and an Euler-Maclaurin tail."""
    t = np.arange(start, M + 1, dtype=float)
    partial = math.fsum((t ** -r)[::-1])
    tail = (
        M ** (1.0 - r) / (r - 1.0)
        - 0.5 * M ** -r
        + r * M ** (-r - 1.0) / 12.0
        - r * (r + 1.0) * (r + 2.0) * M ** (-r - 3.0) / 720.0
    )
    return partial + tail


def sufficient_precision_constant(q, lambda0):
    """Precision scale ``C`` such that ``eta_t^{-2} >= C t^q`` keeps the limit away
    from risk dominance."""
    q = float(q)
    if not q > 2.0:
        raise DomainError(f"q must exceed 2, got {q!r}")
    g1 = normal_quantile(lambda0)
    L = 2.0**-q / (2.0**-q + 1.0)
    S = _zeta_tail(q / 2.0)
    K = (normal_pdf(g1) / (2.0 * S)) ** 2
    return 1.0 / (L * K)


def past_play_precisions(spec, T):
    """Cumulative precisions when agents also see a noisy signal of last period's play."""
    T = int(T)
    if len(spec.sigma2) < T or len(spec.tau2) < T - 1:
        raise LengthError(f"past-play spec too short for T={T}")
    prec = np.empty(T)
    prec[0] = 1.0 / spec.sigma2[0]
    for k in range(1, T):
        prec[k] = prec[k - 1] * (1.0 + 1.0 / spec.tau2[k - 1]) + 1.0 / spec.sigma2[k]
    return prec


def reduce_past_play_signals(spec, T):
    """Equivalent state-signal-only process for the first T periods."""
    prec = past_play_precisions(spec, T)
    inc = np.diff(prec, prepend=0.0)
    with np.errstate(divide="ignore"):
        sig = np.where(inc > 0, 1.0 / np.where(inc > 0, inc, 1.0), np.inf)
    return Explicit(tuple(sig.tolist()))


def refine_time_grid(spec, n, T):
    """Schedule on the grid ``1/n, 2/n, ..., T``.

    Each unit interval's precision arrives in ``n`` equal increments, and the
    integer-time precisions are copied from the unrefined schedule.
    """
    n = int(n)
    if n < 1:
        raise DomainError("n must be at least 1")
    base = materialize(spec, T)
    if n == 1:
        return base
    prev = np.concatenate(([0.0], base.precision[:-1]))
    frac = np.arange(1, n + 1) / n
    prec = prev[:, None] + frac[None, :] * (base.precision - prev)[:, None]
    prec[:, -1] = base.precision
    prec = prec.ravel()
    times = (np.arange(1, n * int(T) + 1) / n)
    return PosteriorSchedule.from_precision(prec, times)


def rescale_payoffs(config, spec):
    """Map an ``(a, b)`` game onto the normalised game.

    Fundamentals map as ``theta -> (a / b) * theta``; see :func:`rescale_theta`.
    """
    k = config.a / config.b
    return GameConfig(config.c / config.b, config.lambda0), spec.scaled(k)


def rescale_theta(config, theta):
    return config.a / config.b * theta


def spec_from_dict(d):
    """Inverse of ``LearningSpec.to_dict``."""
    d = dict(d)
    kind = d.pop("kind", None)
    if kind == "Prefixed":
        return Prefixed(d["prefix"], spec_from_dict(d["base"]))
    classes = {c.__name__: c for c in (IID, OneShot, SocialDoubling, PowerPrecision, GeometricPrecision, Explicit)}
    if kind not in classes:
        raise InvalidSpecError(f"unknown learning process {kind!r}")
    try:
        return classes[kind](**d)
    except TypeError as exc:
        raise InvalidSpecError(f"bad parameters for {kind}: {exc}") from None
