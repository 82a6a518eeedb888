import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twoscale_ldp import (
    BadParam, Estimate, TiltControl, ZeroHits, averaged_ode, crude_ball_probability, ergodic_check,
    is_ball_probability, ldp_slope, nu_p, register_family,
)
from twoscale_ldp.cli import _shifted_measure

Z_EDGES = np.linspace(-3, 3, 13)


@pytest.fixture(scope="module")
def ou_target(ou, ou_p):
    return averaged_ode(ou, ou_p, 1.0, 0.01), nu_p(ou_p, 1.0, 10, Z_EDGES)


def _synthetic(eps_list, logp):
    return [Estimate(math.exp(lp), lp, 0.0, 1, "crude", e, 0.1) for e, lp in zip(eps_list, logp)]


def test_crude_sure_and_null_events(ou, ou_target):
    X, m = ou_target
    sure = crude_ball_probability(ou, 0.05, X, m, 100.0, 200, 0)
    null = crude_ball_probability(ou, 0.05, X, m, 0.0, 200, 0)
    assert sure.p_hat == 1.0 and sure.stderr == 0.0
    assert null.p_hat == 0.0 and null.log_p == -math.inf and "zero hits" in null.note


def test_crude_matches_tilted_on_invariant_ball(ou, ou_target):
    X, m = ou_target
    crude = crude_ball_probability(ou, 0.02, X, m, 0.3, 10_000, 1)
    tilted = is_ball_probability(ou, 0.02, X, m, 0.3, 10_000, 2)
    assert abs(crude.p_hat - tilted.p_hat) <= 3 * crude.stderr
    lo1, hi1 = crude.ci95()
    lo2, hi2 = tilted.ci95()
    assert lo1 <= hi2 and lo2 <= hi1


def test_shifted_target_tilted_has_finite_relative_error_where_crude_has_none(ou, ou_p):
    X = averaged_ode(ou, ou_p, 1.0, 0.01)
    m1 = _shifted_measure(ou_p, 1.0, 10, Z_EDGES, 1.0)
    crude = crude_ball_probability(ou, 0.02, X, m1, 0.25, 10_000, 1)
    tilted = is_ball_probability(ou, 0.02, X, m1, 0.25, 10_000, 2)
    assert crude.hits == 0
    assert tilted.hits > 0 and tilted.stderr / tilted.p_hat < 1.0


@pytest.mark.xfail(strict=True, reason="the delta=0.3 ball around the shifted measure already contains the "
                   "untilted typical behaviour (their distance is about 0.28), so the tilt centred on the "
                   "ball misses the dominant part of the event")
def test_shifted_target_tilted_beats_crude_relative_error(ou, ou_p):
    X = averaged_ode(ou, ou_p, 1.0, 0.01)
    m1 = _shifted_measure(ou_p, 1.0, 10, Z_EDGES, 1.0)
    crude = crude_ball_probability(ou, 0.02, X, m1, 0.3, 10_000, 1)
    tilted = is_ball_probability(ou, 0.02, X, m1, 0.3, 10_000, 2)
    assert crude.hits > 0
    assert tilted.stderr / tilted.p_hat < crude.stderr / crude.p_hat
    assert abs(crude.p_hat - tilted.p_hat) <= 3 * math.hypot(crude.stderr, tilted.stderr)


def test_zero_tilt_weights_are_one(ou, ou_p, ou_target):
    X, _ = ou_target
    z = np.linspace(-5, 5, 101)
    est, w = is_ball_probability(ou, 0.05, X, None, 0.5, 2000, 3, tilt=TiltControl.time_constant(z, 0 * z),
                                 event="all", return_weights=True)
    assert np.all(w == 1.0) and est.p_hat == 1.0


def test_reproducible_across_workers(ou, ou_target):
    X, m = ou_target
    a = crude_ball_probability(ou, 0.05, X, m, 0.3, 300, 9, workers=1)
    b = crude_ball_probability(ou, 0.05, X, m, 0.3, 300, 9, workers=4)
    c = is_ball_probability(ou, 0.05, X, m, 0.3, 300, 9, workers=1)
    d = is_ball_probability(ou, 0.05, X, m, 0.3, 300, 9, workers=4)
    assert a == b and c == d


def test_crude_is_binomial_under_replication(ou, ou_target):
    X, _ = ou_target
    outliers = 0
    for k in range(40):
        a = crude_ball_probability(ou, 0.1, X, None, 0.25, 300, 2 * k, event="escape")
        b = crude_ball_probability(ou, 0.1, X, None, 0.25, 300, 2 * k + 1, event="escape")
        pooled = math.sqrt(a.stderr**2 + b.stderr**2)
        outliers += abs(a.p_hat - b.p_hat) > 6 * pooled
        assert 0.0 <= a.p_hat <= 1.0
    assert outliers / 40 < 0.01


def test_bad_inputs(ou, ou_target):
    X, m = ou_target
    with pytest.raises(BadParam):
        crude_ball_probability(ou, 0.05, X, m, 0.3, 0, 0)
    with pytest.raises(BadParam):
        crude_ball_probability(ou, 0.05, X, m, -0.1, 10, 0)
    with pytest.raises(BadParam):
        crude_ball_probability(ou, 0.05, X, m, 0.1, 10, 0, event="nope")
    with pytest.raises(BadParam):
        is_ball_probability(ou, 0.05, X, None, 0.1, 10, 0)


@settings(max_examples=30, deadline=None)
@given(c=st.floats(0.01, 5.0), eps=st.lists(st.floats(0.01, 1.0), min_size=3, max_size=6, unique=True))
def test_slope_exact_for_pure_exponential(c, eps):
    eps = sorted(eps, reverse=True)
    if min(np.diff(eps[::-1])) < 1e-6:
        return
    fit = ldp_slope(_synthetic(eps, [-c / e for e in eps]), c)
    assert fit.slope == pytest.approx(-c, rel=1e-12, abs=1e-12)
    assert fit.deviation < 1e-10


@settings(max_examples=30, deadline=None)
@given(c=st.floats(0.1, 5.0), d=st.floats(0.0, 2.0))
def test_slope_error_bounded_by_subleading_term(c, d):
    eps = [0.2, 0.1, 0.05]
    fit = ldp_slope(_synthetic(eps, [-c / e + d / math.sqrt(e) for e in eps]), c)
    assert abs(fit.slope + c) <= d * math.sqrt(max(eps)) + 1e-12


def test_slope_errors():
    with pytest.raises(ZeroHits):
        ldp_slope([Estimate(0.0, -math.inf, 0.0, 10, "crude", e, 0.1) for e in (0.2, 0.1, 0.05)], 1.0)
    with pytest.raises(BadParam):
        ldp_slope(_synthetic([0.2, 0.1], [-1, -2]), 1.0)
    with pytest.raises(BadParam):
        ldp_slope(_synthetic([0.1, 0.2, 0.05], [-1, -2, -3]), 1.0)


def test_slope_trend_flag():
    eps = [0.2, 0.1, 0.05]
    fit = ldp_slope(_synthetic(eps, [-1 / e + 0.5 / math.sqrt(e) for e in eps]), 1.0)
    assert fit.monotone_trend
    assert set(fit.to_dict()) >= {"slope", "intercept", "rate_ref", "deviation", "monotone_trend"}


def test_ergodic_deterministic_slow_flow_has_zero_distance():
    cs = register_family("ou_linear", {"a1": 0.0, "b1": 0.0}, x0=1.0)
    rep = ergodic_check(cs, [0.05, 0.02], 1.0, 10, 0)
    assert all(row["median_r"] == 0.0 for row in rep["rows"])


def test_ergodic_single_eps_passes_with_note(ou):
    rep = ergodic_check(ou, [0.05], 1.0, 10, 0)
    assert rep["verdict"] is True and "vacuous" in rep["note"]
    with pytest.raises(BadParam):
        ergodic_check(ou, [0.02, 0.05], 1.0, 10, 0)
