"""Parameter records, derived constants, and the feasibility checkers."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renormflow.exceptions import ParameterError
from renormflow.params import (
    BoundConstants,
    Params,
    check_nontrivial_hypotheses,
    check_trivial_hypotheses,
    derived_constants,
    leray_exponent,
    witness_search,
    witness_systems,
)

# the reference parameter tuple used throughout: ball-invariance family
BALL = dict(d=3, gamma=2.0, p=2.0, nu=1.0, r=5.0, kappa=3.0 / 5.0 - 2.0)


def test_leray_exponent_values():
    assert leray_exponent(3, 2.0) == -2.0
    assert leray_exponent(2, 3.0) == 0.0
    assert leray_exponent(3, 4.0) == 0.0


def test_leray_exponent_rejects_bad_input():
    with pytest.raises(ParameterError):
        leray_exponent(0, 2.0)
    with pytest.raises(ParameterError):
        leray_exponent(3, 0.0)


@given(st.integers(1, 6), st.floats(0.5, 12.0))
def test_leray_exponent_shift(d, gamma):
    assert leray_exponent(d, gamma + 1.0) == pytest.approx(
        leray_exponent(d, gamma) + 1.0, abs=1e-12
    )


def test_params_validation():
    with pytest.raises(ParameterError):
        Params(d=3, gamma=2.0, p=1.0)
    with pytest.raises(ParameterError):
        Params(d=3, gamma=2.0, beta=1.0)
    with pytest.raises(ParameterError):
        Params(d=1, gamma=2.0)
    with pytest.raises(ParameterError):
        Params(d=3, gamma=2.0, r=1.0)


def test_scaling_exponent_and_conjugate():
    pr = Params(**BALL)
    assert pr.c == -2.0
    assert pr.s == 1.25
    assert Params(d=3, gamma=2.0, r=2.0).s == 2.0


def test_derived_constants_frozen_values():
    # hand arithmetic: 2*4/5 - 1*0.6 - 3*3/10 = 0.1
    dc = derived_constants(Params(**BALL))
    assert dc.m == pytest.approx(0.1, abs=1e-12)
    # l(c) = 3/1.25 - (-2 + 3 - 1 + 1.4) = 2.4 - 1.4
    assert dc.l_of_k(-2.0) == pytest.approx(1.0, abs=1e-12)


def test_mu_min_frozen_value():
    # growth factor beta^(c+alpha+d) - 1 = 2 - 1 at beta=0.5, c+alpha+d=-1
    pr = Params(**BALL, alpha=-2.0, beta=0.5)
    dc = derived_constants(pr)
    assert dc.mu_min == pytest.approx(0.5, abs=1e-12)


def test_hoelder_threshold_degenerates_with_large_theta():
    fine = derived_constants(Params(**BALL, theta=0.25, beta=0.5))
    assert 0.0 < fine.k_min < math.inf
    assert fine.a_hat == pytest.approx(0.5 * fine.a_max, abs=1e-15)
    coarse = derived_constants(Params(**BALL, theta=0.5, beta=0.5))
    assert math.isinf(coarse.k_min)


def test_ball_radius_vanishes_toward_unit_scale():
    values = [
        derived_constants(Params(**BALL, beta=b)).a_max
        for b in (0.9, 0.99, 0.999)
    ]
    assert values[0] > values[1] > values[2] > 0.0


def test_ball_family_member_passes_h1_h2():
    report = check_trivial_hypotheses(Params(**BALL))
    assert report.subsystem("H1")
    assert report.subsystem("H2")


def test_ball_family_boundary_fails_h2_with_zero_slack():
    report = check_trivial_hypotheses(
        Params(d=3, gamma=2.0, p=2.0, nu=1.0, r=4.0, kappa=3.0 / 4.0 - 2.0)
    )
    row = report.row("H2.2")
    assert not row.passed
    assert row.lhs == pytest.approx(3.0, abs=1e-12)
    assert row.rhs == pytest.approx(3.0, abs=1e-12)
    assert row.slack == pytest.approx(0.0, abs=1e-12)
    assert not report.subsystem("H2")


def test_trivial_report_is_pure():
    a = check_trivial_hypotheses(Params(**BALL))
    b = check_trivial_hypotheses(Params(**BALL))
    assert a == b


def test_envelope_example_passes_h13():
    pr = Params(d=2, gamma=3.0, p=3.0, sigma=-0.3, kappa=0.5, theta=0.5, nu=0.5)
    report = check_nontrivial_hypotheses(pr)
    assert report.subsystem("H13")
    row = report.row("H13.1a")
    assert row.lhs == pytest.approx(2.7, abs=1e-12)
    assert row.rhs == 3.0


def test_half_integer_sigma_excluded():
    pr = Params(d=2, gamma=3.0, p=3.0, sigma=-0.5, kappa=0.5, theta=0.5, nu=0.5)
    report = check_nontrivial_hypotheses(pr)
    assert not report.row("H13.2c").passed
    assert not report.subsystem("H13")


def test_gamma_ceiling_enforced():
    pr = Params(d=2, gamma=6.5, p=3.0, sigma=-0.3, kappa=0.5, theta=0.5, nu=0.5)
    report = check_nontrivial_hypotheses(pr)
    assert not report.row("H13.1b").passed


def test_report_serialization_round_trip():
    report = check_trivial_hypotheses(Params(**BALL), BoundConstants(C_2=2.0))
    text = report.to_text()
    assert "C_2=2" in text
    assert text.count("\n") >= len(report.rows)
    mapping = report.to_mapping()
    assert mapping["H2.2.pass"] is True
    assert mapping["const.C_2"] == 2.0


def test_rewrite_form_of_coupled_row_reported():
    pr = Params(d=2, gamma=3.0, p=3.0, sigma=-0.3, kappa=0.5, theta=0.5, nu=0.5)
    notes = check_nontrivial_hypotheses(pr).notes
    assert any("rewrite" in n for n in notes)


def test_witness_search_finds_passing_tuple():
    found = witness_search(2, 3.0, budget=20_000, seed=0)
    assert found is not None
    assert check_nontrivial_hypotheses(found).overall


def test_witness_search_deterministic_per_seed():
    a = witness_search(2, 3.0, budget=20_000, seed=7)
    b = witness_search(2, 3.0, budget=20_000, seed=7)
    assert a == b


def test_witness_search_rejects_out_of_range():
    assert witness_search(2, 7.0, budget=100, seed=0) is None
    assert witness_search(2, 2.0, budget=100, seed=0) is None


def test_witness_search_reduced_target_beyond_theta_cap():
    # gamma >= d+3 contradicts H12.5b with theta <= 1 and kappa > 0, so
    # the search falls back to the reduced system there
    assert witness_systems(2, 3.0) == ("H9", "H10", "H11", "H12", "H13")
    assert witness_systems(2, 5.5) == ("H9", "H10", "H13")
    found = witness_search(2, 5.5, budget=20_000, seed=0)
    assert found is not None
    assert check_nontrivial_hypotheses(found, witness_systems(2, 5.5)).overall


@settings(deadline=None, max_examples=20)
@given(st.integers(2, 3), st.floats(0.3, 0.9))
def test_witness_search_output_always_verifies(d, frac):
    gamma = d + frac * (d + 2.0)
    found = witness_search(d, gamma, budget=5_000, seed=11)
    if found is not None:
        report = check_nontrivial_hypotheses(found, witness_systems(d, gamma))
        assert report.overall
