import math

import numpy as np
import pytest

from inertial_games.errors import DomainError, LengthError
from inertial_games.finite import (
    FiniteSimConfig,
    _stream,
    concentration_report,
    simulate_finite,
)
from inertial_games.kernel import GameConfig, threshold_path
from inertial_games.processes import IID, Explicit, materialize

CFG = GameConfig(1.0, 0.2)
SPEC = IID(1.0)


@pytest.mark.parametrize(
    "kw",
    [dict(N=0, T=5, theta=0.1), dict(N=3, T=0, theta=0.1), dict(N=3, T=5, theta=0.1, replications=0),
     dict(N=2.5, T=5, theta=0.1), dict(N=3, T=5, theta=0.1, seed=-1), dict(N=3, T=5, theta=0.1, seed=2**64)],
)
def test_config_validation(kw):
    with pytest.raises(DomainError):
        FiniteSimConfig(**kw)


def test_single_agent_follows_its_own_posterior():
    fsc = FiniteSimConfig(N=1, T=30, theta=0.55, seed=11, replications=3)
    spec = Explicit((1.0, math.inf, 0.5), tail=2.0)
    res = simulate_finite(CFG, spec, fsc)
    assert set(np.unique(res.lam_N)) <= {0.0, 1.0}
    sched = materialize(spec, 30)
    mu_star = threshold_path(CFG, sched, 30).mu_star
    for rep in range(3):
        total, prec = 0.0, 0.0
        for k in range(30):
            s2 = sched.sigma2[k]
            if math.isfinite(s2):
                x = 0.55 + math.sqrt(s2) * _stream(11, rep, k + 1).standard_normal(1)[0]
                total += x / s2
                prec += 1 / s2
            assert res.lam_N[rep, k] == float(total / prec >= mu_star[k])


def test_support_is_multiples_of_one_over_N():
    res = simulate_finite(CFG, SPEC, FiniteSimConfig(N=37, T=20, theta=0.6, replications=4))
    k = res.lam_N * 37
    np.testing.assert_array_equal(k, np.round(k))
    assert np.all((res.lam_N >= 0) & (res.lam_N <= 1))


def test_same_seed_is_bit_identical():
    fsc = FiniteSimConfig(N=500, T=25, theta=0.6, seed=123, replications=6)
    a = simulate_finite(CFG, SPEC, fsc)
    b = simulate_finite(CFG, SPEC, fsc)
    np.testing.assert_array_equal(a.lam_N, b.lam_N)
    assert a.digest() == b.digest()


def test_different_seeds_differ():
    a = simulate_finite(CFG, SPEC, FiniteSimConfig(N=500, T=25, theta=0.6, seed=1))
    b = simulate_finite(CFG, SPEC, FiniteSimConfig(N=500, T=25, theta=0.6, seed=2))
    assert a.digest() != b.digest()


@pytest.mark.parametrize("workers", [2, 4, 8])
def test_worker_count_does_not_change_draws(workers):
    fsc = FiniteSimConfig(N=300, T=30, theta=0.6, seed=9, replications=12)
    assert simulate_finite(CFG, SPEC, fsc).digest() == simulate_finite(CFG, SPEC, fsc, workers=workers).digest()


def test_cutoffs_are_the_continuum_thresholds():
    fsc = FiniteSimConfig(N=10, T=40, theta=0.6)
    res = simulate_finite(CFG, SPEC, fsc)
    ref = threshold_path(CFG, materialize(SPEC, 40), 40).mu_star
    assert res.mu_star.tobytes() == ref.tobytes()


def test_replication_mean_is_unbiased():
    N, R = 200, 400
    res = simulate_finite(CFG, SPEC, FiniteSimConfig(N=N, T=30, theta=0.6, seed=0, replications=R))
    mean = res.lam_N.mean(axis=0)
    se = np.sqrt(res.lam * (1 - res.lam) / (N * R))
    assert np.all(np.abs(mean - res.lam) <= 3 * se + 1e-12)


def test_standardized_errors_are_calibrated():
    # Across independent seeds the period-1 z-scores should look standard normal.
    N, R = 200, 100
    z = []
    for seed in range(80):
        res = simulate_finite(CFG, SPEC, FiniteSimConfig(N=N, T=1, theta=0.6, seed=seed, replications=R))
        se = math.sqrt(res.lam[0] * (1 - res.lam[0]) / (N * R))
        z.append((res.lam_N[:, 0].mean() - res.lam[0]) / se)
    z = np.array(z)
    assert abs(z.mean()) < 0.5
    assert 0.7 < z.std() < 1.3


def test_error_shrinks_at_square_root_rate():
    errs = []
    for N in (100, 1000, 10000):
        fsc = FiniteSimConfig(N=N, T=50, theta=0.6, seed=2024, replications=60)
        errs.append(simulate_finite(CFG, SPEC, fsc, workers=4).mean_sup_error)
    assert errs[0] > errs[1] > errs[2]
    for big, small in zip(errs, errs[1:]):
        assert math.sqrt(10) / 2 <= big / small <= 2 * math.sqrt(10)


def test_huge_population_hugs_the_continuum():
    res = simulate_finite(CFG, SPEC, FiniteSimConfig(N=10**6, T=20, theta=0.6, seed=3))
    assert res.sup_error[0] < 0.005


def test_concentration_report():
    small = simulate_finite(CFG, SPEC, FiniteSimConfig(N=100, T=20, theta=0.6, replications=40))
    big = simulate_finite(CFG, SPEC, FiniteSimConfig(N=10000, T=20, theta=0.6, replications=40))
    rows = concentration_report([big, small])
    assert [r[0] for r in rows] == [100, 10000]
    assert rows[1][1] < rows[0][1]
    assert all(r[1] <= r[2] + 1e-15 for r in rows)


def test_concentration_report_needs_two_sizes():
    with pytest.raises(LengthError):
        concentration_report([])
    one = simulate_finite(CFG, SPEC, FiniteSimConfig(N=10, T=5, theta=0.6))
    with pytest.raises(LengthError):
        concentration_report([one])
