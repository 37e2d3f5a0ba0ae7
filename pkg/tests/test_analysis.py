import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from inertial_games.analysis import (
    InitialPlayPair,
    LearningSpeedPair,
    SwapPair,
    beta_bar,
    comparative_statics_harness,
    crossing_time,
    default_beta,
    detect_transition,
    gradual_step_bound,
    idsds_contemporaneous_cutoffs,
    limit_play,
    limit_threshold,
    phase_diagram,
    prefix_irrelevance_check,
    swap_periods,
)
from inertial_games.errors import ConfigError, DomainError, UnconvergedError
from inertial_games.kernel import GameConfig, aggregate_play, gamma_path, threshold_path
from inertial_games.processes import (
    IID,
    Explicit,
    GeometricPrecision,
    OneShot,
    PowerPrecision,
    Prefixed,
    SocialDoubling,
    materialize,
)

CFG = GameConfig(1.0, 0.75)
FIG6 = GameConfig(1.0, 0.2)


def fig6_play(sigma, T):
    sched = materialize(IID(sigma), T)
    return aggregate_play(0.6, threshold_path(FIG6, sched, T), sched)


# -- limit_threshold ----------------------------------------------------------

def test_one_shot_limit_is_risk_dominant():
    r = limit_threshold(CFG, OneShot(0.5))
    assert r.converged and r.regime == "risk_dominant"
    assert abs(r.mu_inf - 0.5) < 1e-6


def test_iid_limit_is_risk_dominant():
    r = limit_threshold(CFG, IID(1.0), T_max=10**4)
    assert r.converged and abs(r.mu_inf_estimate - 0.5) < 1e-6
    assert abs(r.gamma_inf_estimate) < 1e-10
    assert r.monotone


@pytest.mark.parametrize("spec", [IID(1.0), OneShot(2.0), PowerPrecision(1.0, 0.5), PowerPrecision(1.0, 1.0),
                                  PowerPrecision(1.0, 1.5)], ids=str)
@pytest.mark.parametrize("l0", [0.2, 0.75])
def test_subquadratic_desk_scale(spec, l0):
    r = limit_threshold(GameConfig(1.0, l0), spec)
    assert r.converged and abs(r.mu_inf - 0.5) < 1e-4


def test_fast_social_learning_freezes_between_the_benchmarks():
    r = limit_threshold(CFG, SocialDoubling(0.05))
    assert r.regime == "frozen"
    assert 0.25 < r.mu_inf < 0.5
    # Value frozen from this run; the gamma recursion below confirms it.
    assert r.mu_inf == pytest.approx(0.351562482896676, abs=1e-9)
    g, _ = gamma_path(0.75, materialize(SocialDoubling(0.05), r.periods_used + 100).A)
    assert 1 - float(oracles.ncdf(g[-1])) == pytest.approx(r.mu_inf, abs=1e-12)
    assert abs(g[-1] - g[-101]) < 1e-12


def test_faster_social_learning_approaches_initial_play():
    gaps = [limit_threshold(CFG, SocialDoubling(s)).mu_inf - 0.25 for s in (0.3, 0.05, 0.003)]
    assert gaps[0] > gaps[1] > gaps[2] > 0
    assert gaps[2] < 0.01


def test_geometric_limit_stays_off_risk_dominance():
    r = limit_threshold(CFG, GeometricPrecision(1.0, 2.0))
    assert r.regime == "frozen"
    assert r.gamma_inf > 0
    assert abs(r.mu_inf - 0.5) > 1e-3


def test_freeze_just_above_tolerance_is_detected():
    # Stalls with |gamma| between tol and 10 tol; used to run out to T_max.
    r = limit_threshold(GameConfig(1.0, 0.25), GeometricPrecision(0.08, 1.5))
    assert r.regime == "frozen" and r.periods_used < 1000
    assert 1e-10 <= abs(r.gamma_inf) < 1e-9


def test_symmetric_start_is_immediately_risk_dominant():
    r = limit_threshold(GameConfig(1.0, 0.5), IID(1.0))
    assert r.regime == "risk_dominant" and r.periods_used == 1 and r.mu_inf == 0.5


def test_short_budget_reports_unconverged():
    r = limit_threshold(CFG, IID(1.0), T_max=5)
    assert not r.converged and r.regime == "unconverged" and r.periods_used == 5
    with pytest.raises(UnconvergedError):
        limit_play(0.6, r)


def test_payoff_scales_report_theta_units():
    cfg = GameConfig(1.0, 0.75, 0.5, 0.8)
    r = limit_threshold(cfg, IID(1.0))
    assert r.mu_inf == pytest.approx(cfg.steady_state, abs=1e-8)


@pytest.mark.parametrize("kw", [dict(tol=0.0), dict(T_max=0)])
def test_limit_domain(kw):
    with pytest.raises(DomainError):
        limit_threshold(CFG, IID(1.0), **kw)


def test_uninformative_first_period():
    with pytest.raises(ConfigError):
        limit_threshold(CFG, Explicit((math.inf, 1.0)))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.1, 5.0))
def test_iid_always_reaches_risk_dominance(l0, sigma):
    r = limit_threshold(GameConfig(1.0, l0), IID(sigma))
    assert r.converged and abs(r.mu_inf - 0.5) < 1e-8


# -- limit_play ---------------------------------------------------------------

def test_limit_play_examples():
    rd = limit_threshold(CFG, IID(1.0))
    assert limit_play(0.6, rd) == 1
    assert limit_play(0.4, rd) == 0
    fast = limit_threshold(CFG, SocialDoubling(0.003))
    assert limit_play(0.3, fast) == 1


# -- crossing time and transitions --------------------------------------------

def test_crossing_time_grows_as_noise_vanishes():
    sigmas = [1.0, 0.3, 0.1, 0.03, 0.01, 0.003]
    T = [crossing_time(FIG6, s, 0.6) for s in sigmas]
    assert all(a < b for a, b in zip(T, T[1:]))
    assert T[4] == 252


def test_crossing_time_matches_definition():
    T = crossing_time(FIG6, 0.1, 0.6)
    mu = threshold_path(FIG6, materialize(IID(0.1), T + 1), T + 1).mu_star
    assert mu[T - 1] >= 0.6 > mu[T]


@pytest.mark.parametrize("theta", [0.8, 0.5, 0.9, 0.1])
def test_crossing_time_domain(theta):
    with pytest.raises(DomainError):
        crossing_time(FIG6, 0.1, theta)


def test_sudden_transition_small_noise():
    rep = detect_transition(fig6_play(0.01, 1000), 0.6, FIG6, beta=1.04)
    assert rep.regime == "Sudden"
    assert rep.T_cross == 252
    assert 1 < rep.beta < rep.beta_bar


def test_large_noise_steps_stay_under_the_analytic_bound():
    rep = detect_transition(fig6_play(1.0, 200), 0.6, FIG6, sigma=1.0)
    assert rep.max_step < rep.step_bound
    assert rep.step_bound == pytest.approx(gradual_step_bound(0.6, 1.0, 1.0))


def test_smooth_path_is_gradual():
    # Very noisy learning moves play in small steps.
    rep = detect_transition(fig6_play(50.0, 2000), 0.6, FIG6)
    assert rep.regime == "Gradual"


def test_transition_defaults():
    assert beta_bar(0.6, 1.0) == pytest.approx(1.05)
    assert default_beta(0.6, 1.0) == pytest.approx(1.025)
    assert default_beta(-3.0, 1.0) == 1.04


@pytest.mark.parametrize(
    "kw", [dict(epsilon=0.6), dict(epsilon=0.0), dict(alpha=1.0), dict(beta=1.0), dict(beta=1.2)]
)
def test_transition_parameter_domain(kw):
    with pytest.raises(DomainError):
        detect_transition(fig6_play(0.1, 50), 0.6, FIG6, **kw)


def test_transition_theta_must_match_path():
    with pytest.raises(DomainError):
        detect_transition(fig6_play(0.1, 50), 0.55, FIG6)


# -- comparative statics ------------------------------------------------------

GEO = GeometricPrecision(1.0, 2.0)


def test_clause_i_example():
    rep = comparative_statics_harness([InitialPlayPair(1.0, GEO, 0.6, 0.9)])
    assert rep.checked == 1 and rep.violations == []


def test_clause_ii_example():
    rep = comparative_statics_harness([LearningSpeedPair(CFG, GEO.scaled(2.0), GEO)])
    assert rep.violations == []
    slow = limit_threshold(CFG, GEO.scaled(2.0)).mu_inf
    fast = limit_threshold(CFG, GEO).mu_inf
    assert abs(slow - 0.5) < abs(fast - 0.5)


def test_clause_iii_example():
    spec = Prefixed((1.0, 0.001), GEO)
    rep = comparative_statics_harness([SwapPair(CFG, spec, 8, 2)])
    assert rep.violations == []
    swapped = swap_periods(spec, 8, 2)
    v = swapped.signal_variances(1, 10)
    assert v[7] == 0.001 and v[1] == spec.signal_variances(8, 9)[0]


def test_malformed_pairs():
    with pytest.raises(ConfigError):
        comparative_statics_harness([InitialPlayPair(1.0, GEO, 0.9, 0.6)])
    with pytest.raises(ConfigError):
        comparative_statics_harness([LearningSpeedPair(CFG, GEO, GEO.scaled(2.0))])
    with pytest.raises(ConfigError):
        comparative_statics_harness([SwapPair(CFG, Prefixed((1.0, 0.001), GEO), 2, 8)])
    with pytest.raises(ConfigError):
        comparative_statics_harness([SwapPair(CFG, Prefixed((1.0, 1.0, 0.001), GEO), 3, 1)])
    with pytest.raises(ConfigError):
        comparative_statics_harness([object()])


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.5, 50), st.floats(1.5, 4.0))
def test_clause_i_random(l0, l0p, C, r):
    if abs(l0 - 0.5) > abs(l0p - 0.5):
        l0, l0p = l0p, l0
    rep = comparative_statics_harness([InitialPlayPair(1.0, GeometricPrecision(C, r), l0, l0p)])
    assert rep.violations == []


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(1.0, 5.0), st.floats(0.5, 50), st.floats(1.5, 4.0))
def test_clause_ii_random(l0, k, C, r):
    spec = GeometricPrecision(C, r)
    rep = comparative_statics_harness([LearningSpeedPair(GameConfig(1.0, l0), spec.scaled(k), spec)])
    assert rep.violations == []


# -- prefix irrelevance -------------------------------------------------------

def test_precise_prefix_is_forgotten():
    chk = prefix_irrelevance_check(CFG, IID(1.0), (1e-3,) * 10)
    assert chk.passed and abs(chk.mu_inf - 0.5) <= 1e-4


def test_uninformative_prefix_only_delays():
    chk = prefix_irrelevance_check(CFG, IID(1.0), (math.inf,) * 10)
    assert chk.passed and chk.delay == 10
    assert chk.mu_inf == limit_threshold(CFG, IID(1.0)).mu_inf


def test_empty_prefix_is_identity():
    chk = prefix_irrelevance_check(CFG, IID(1.0), ())
    assert chk.mu_inf == limit_threshold(CFG, IID(1.0)).mu_inf


def test_prefix_check_requires_subquadratic():
    with pytest.raises(DomainError):
        prefix_irrelevance_check(CFG, GEO, (1.0,))


# -- phase diagram ------------------------------------------------------------

def test_subquadratic_boundary_is_flat():
    d = phase_diagram(IID(1.0), [0.1, 0.3, 0.5, 0.7, 0.9], [0.2, 0.6])
    for l0, b in d.boundary.items():
        assert b == pytest.approx(0.5, abs=1e-8)
    assert all(d.converged.values())
    assert {(r[0], r[1]): r[2] for r in d.rows}[(0.9, 0.6)] == 1


def test_fast_learning_boundary_rotates_toward_initial_play():
    grid = [0.2, 0.35, 0.65, 0.8]
    slow = phase_diagram(SocialDoubling(0.3), grid, [0.5]).boundary
    fast = phase_diagram(SocialDoubling(0.003), grid, [0.5]).boundary
    for l0 in grid:
        assert abs(fast[l0] - (1 - l0)) < abs(slow[l0] - (1 - l0))
        assert abs(fast[l0] - (1 - l0)) < 0.02


def test_boundary_passes_through_symmetric_point():
    d = phase_diagram(SocialDoubling(0.05), [0.5], [0.5], c=1.7)
    assert d.boundary[0.5] == pytest.approx(1.2, abs=1e-12)


def test_phase_grids_nonempty():
    with pytest.raises(DomainError):
        phase_diagram(IID(1.0), [], [0.5])


# -- contemporaneous cutoffs --------------------------------------------------

@pytest.mark.parametrize("eta", [0.1, 1.0])
def test_idsds_limits(eta):
    up, lo = idsds_contemporaneous_cutoffs(eta, 1.0)
    assert (up[0], lo[0]) == (1.0, 0.0)
    assert up[-1] == pytest.approx(0.5, abs=1e-9)
    assert lo[-1] == pytest.approx(0.5, abs=1e-9)
    assert np.all(np.diff(up) < 0) and np.all(np.diff(lo) > 0)
    assert np.all(lo <= 0.5) and np.all(up >= 0.5)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 10.0), st.floats(-2.0, 3.0))
def test_idsds_sandwich(eta, c):
    up, lo = idsds_contemporaneous_cutoffs(eta, c, k_max=200)
    assert np.all(lo <= c - 0.5 + 1e-12) and np.all(up >= c - 0.5 - 1e-12)
    assert np.all(np.diff(up) <= 1e-15) and np.all(np.diff(lo) >= -1e-15)


def test_idsds_domain():
    with pytest.raises(DomainError):
        idsds_contemporaneous_cutoffs(0.0, 1.0)
