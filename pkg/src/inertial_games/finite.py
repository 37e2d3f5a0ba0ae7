"""Finite-population Monte Carlo against the continuum benchmark."""

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, LengthError
from .kernel import aggregate_play, threshold_path
from .processes import materialize


@dataclass(frozen=True)
class FiniteSimConfig:
    N: int
    T: int
    theta: float
    seed: int = 0
    replications: int = 1

    def __post_init__(self):
        for name in ("N", "T", "replications"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "theta", float(self.theta))


@dataclass(frozen=True, eq=False)
class FiniteSimResult:
    config: FiniteSimConfig
    lam_N: np.ndarray
    lam: np.ndarray
    mu_star: np.ndarray
    sup_error: np.ndarray

    @property
    def mean_sup_error(self):
        return float(self.sup_error.mean())

    @property
    def p95_sup_error(self):
        return float(np.percentile(self.sup_error, 95))

    def digest(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.lam_N).tobytes())
        h.update(np.ascontiguousarray(self.sup_error).tobytes())
        return h.hexdigest()


def _stream(seed, rep, t):
    # One Philox stream per (replication, period); agent i takes the i-th draw.
    ss = np.random.SeedSequence(seed, spawn_key=(rep, t))
    return np.random.Generator(np.random.Philox(ss))


def _replicate(rep, fsc, sigma, precision, mu_star):
    N = fsc.N
    weighted = np.zeros(N)
    counts = np.empty(fsc.T, dtype=np.int64)
    for k in range(fsc.T):
        s = sigma[k]
        if np.isfinite(s):
            x = fsc.theta + s * _stream(fsc.seed, rep, k + 1).standard_normal(N)
            weighted += x / (s * s)
        counts[k] = np.count_nonzero(weighted / precision[k] >= mu_star[k])
    return counts


def simulate_finite(config, spec, fsc, workers=1):
    """Empirical play of ``N`` agents who use the continuum cutoffs.

    Results depend only on ``(seed, N, T, replications)``; the worker count
    changes scheduling, never the draws.
    """
    sched = materialize(spec, fsc.T)
    path = threshold_path(config, sched, fsc.T)
    lam = aggregate_play(fsc.theta, path, sched).lam
    sigma = np.sqrt(sched.sigma2)
    args = (fsc, sigma, sched.precision, path.mu_star)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            counts = list(pool.map(lambda r: _replicate(r, *args), range(fsc.replications)))
    else:
        counts = [_replicate(r, *args) for r in range(fsc.replications)]
    lam_N = np.vstack(counts) / fsc.N
    sup = np.max(np.abs(lam_N - lam[None, :]), axis=1)
    return FiniteSimResult(fsc, lam_N, lam, path.mu_star, sup)


def concentration_report(results):
    """Rows ``(N, mean sup-error, 95th percentile sup-error)`` sorted by N."""
    results = list(results)
    if len(results) < 2:
        raise LengthError("concentration report needs at least two population sizes")
    rows = [(r.config.N, r.mean_sup_error, r.p95_sup_error) for r in results]
    return sorted(rows)
