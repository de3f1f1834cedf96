"""Tests for the auxiliary bound profiles and the integral inequality.

Frozen reference values were computed with mpmath at 30+ digits from the
defining incomplete-gamma expression
``w_k(r) = e^-r (Gamma(a, s r^g) - Gamma(a, s (r/beta)^g))^(1/s)``.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from renormflow.bounds import (
    DominationReport,
    envelope_domination,
    gamma_index,
    lemma_Ik_check,
    vc_membership_check,
    wk_defining_quadrature,
    wk_envelope,
    wk_exact,
    wk_point,
)
from renormflow.exceptions import ParameterError
from renormflow.grids import RadialGrid, ScalarRadialProfile
from renormflow.params import Params, check_trivial_hypotheses

WITNESS = dict(d=3, gamma=2.0, beta=0.5, p=2.0, nu=1.0, r=5.0, kappa=-1.4)


@pytest.fixture(scope="module")
def witness() -> Params:
    return Params(**WITNESS)


@pytest.fixture(scope="module")
def grid() -> RadialGrid:
    return RadialGrid.build()


# -- point values against external references --------------------------


def test_wk_point_frozen_values(witness):
    # mpmath oracles at the witness parameters
    assert wk_point(witness, -2.0, 1.0) == pytest.approx(
        0.10802183936116161, rel=1e-10
    )
    assert wk_point(witness, -1.5, 2.0) == pytest.approx(
        9.350450439737478e-4, rel=1e-10
    )
    assert wk_point(witness, -2.0, 0.01) == pytest.approx(
        0.020835728015102728, rel=1e-10
    )


def test_wk_asymptotic_path_frozen_value():
    # gamma=3 pushes s r^gamma past the direct-evaluation cut at eta=8.7
    pars = Params(d=2, gamma=3.0, beta=0.5, p=2.0, nu=1.0, r=5.0, kappa=0.5)
    assert gamma_index(pars, 0.0) == pytest.approx(1.25 * 1.1 / 3.0, abs=1e-12)
    assert wk_point(pars, 0.0, 8.7) == pytest.approx(
        9.4150177342231172e-292, rel=1e-9
    )


def test_wk_cancellation_safe_near_collapse():
    # beta=0.9999 puts the two gamma arguments within 3e-4 relative, which
    # routes the difference through the defining-integral branch
    pars = Params(**{**WITNESS, "beta": 0.9999})
    assert wk_point(pars, -2.0, 1.0) == pytest.approx(
        1.6622092441574183e-4, rel=1e-9
    )
    assert wk_point(pars, -2.0, 2.0) == pytest.approx(
        6.0870584023711527e-6, rel=1e-9
    )


def test_wk_collapses_as_beta_approaches_one():
    vals = []
    for b in (0.5, 0.9, 0.99, 0.999):
        pars = Params(**{**WITNESS, "beta": b})
        vals.append(wk_point(pars, -2.0, 1.0))
    assert all(x > y > 0.0 for x, y in zip(vals, vals[1:]))
    assert vals[2] == pytest.approx(0.0066103595, rel=1e-6)
    assert vals[3] == pytest.approx(0.001048688, rel=1e-6)


# -- dual-route cross-check ---------------------------------------------


def test_wk_exact_matches_defining_quadrature(witness, grid):
    # 20 (k, eta) pairs spanning positive, small and negative gamma indices
    ks = [-2.5, -2.0, -1.5, -1.2, 0.5]
    etas = np.array([0.05, 0.3, 1.0, 2.0])
    for k in ks:
        direct = np.array([wk_point(witness, k, e) for e in etas])
        quad = wk_defining_quadrature(witness, k, etas)
        assert np.all(np.abs(direct - quad) <= 1e-8 * np.abs(quad))


def test_wk_exact_profile_on_grid(witness, grid):
    prof = wk_exact(witness, -2.0, grid)
    assert prof.k == -2.0
    assert np.all(prof.profile.values >= 0.0)
    assert prof.profile.origin_power == pytest.approx(1.0, abs=1e-12)
    # origin model continues the r**l(k) behaviour below the grid; the
    # anchor freezes the e^-r factor, an O(r_min) relative effect
    below = 0.7 * grid.r_min
    assert prof(below) == pytest.approx(wk_point(witness, -2.0, below), rel=1e-4)
    # interpolation between nodes stays close to the pointwise formula
    for eta in (0.013, 0.77):
        assert prof(eta) == pytest.approx(wk_point(witness, -2.0, eta), rel=1e-5)
    # out in the superexponential decay the interpolant loses accuracy
    # but stays within a few percent
    assert prof(1.77) == pytest.approx(wk_point(witness, -2.0, 1.77), rel=2e-2)


def test_gamma_pole_flagged(witness, grid):
    # l(k) = 0 at k = -1 for the witness parameters, so a = 0 is a pole
    with pytest.raises(ParameterError):
        wk_exact(witness, -1.0, grid)
    # a = -1 is the next pole down, at l(k) = -gamma/s
    with pytest.raises(ParameterError):
        wk_point(witness, 0.6, 1.0)


# -- envelope -----------------------------------------------------------


def test_envelope_requires_positive_index(witness, grid):
    with pytest.raises(ParameterError):
        wk_envelope(witness, 0.5, grid)


def test_envelope_domination_split_by_regime(witness, grid):
    report = envelope_domination(witness, -2.0, grid)
    assert isinstance(report, DominationReport)
    # the large-radius branch genuinely dominates, with margin
    assert report.large_regime_ratio < 1.0
    assert report.large_regime_ratio == pytest.approx(0.9346888, rel=1e-3)
    # the small-radius branch does not: the exact profile exceeds it by
    # the index-dependent factor (s**a / a)**(1/s), worst at the origin
    assert not report.dominated
    a = gamma_index(witness, -2.0)
    s = witness.s
    limit = (s**a / a) ** (1.0 / s)
    assert limit == pytest.approx(1.6283621261476175, rel=1e-12)
    assert report.max_ratio == pytest.approx(limit, rel=1e-4)
    assert report.worst_radius == grid.r_min
    assert report.small_regime_ratio == report.max_ratio
    assert report.fitted_constant >= report.max_ratio
    assert "FAIL" in report.line()


# -- integral inequality ------------------------------------------------


def _gaussian(grid: RadialGrid, rate: float = 0.5) -> ScalarRadialProfile:
    return ScalarRadialProfile.from_callable(
        lambda r: np.exp(-rate * r**2), grid, origin_power=0.0
    )


def test_lemma_ik_gaussian_pair_stable(witness, grid):
    # six samples in the window where the bound is closest to sharp for
    # a Gaussian pair (the fitted constant peaks near eta = 2.5)
    omega = _gaussian(grid)
    theta_f = _gaussian(grid, rate=0.7)
    etas = np.array([1.8, 2.1, 2.4, 2.7, 3.0, 3.3])
    report = lemma_Ik_check(witness, omega, theta_f, -2.0, etas)
    assert not report.vacuous
    assert np.all(np.isfinite(report.fitted)) and np.all(report.fitted > 0.0)
    mean = float(np.mean(report.fitted))
    assert np.all(report.fitted <= 1.3 * mean)
    assert np.all(report.fitted >= 0.7 * mean)
    assert report.c_fit == pytest.approx(float(np.max(report.fitted)), rel=1e-15)
    assert "fitted C" in report.line()


def test_lemma_ik_slack_off_the_saturation_window(witness, grid):
    # away from the peak the inequality holds with growing slack: a tame
    # pair cannot track the class-extremal profile shape, so the fitted
    # constant decays toward both ends
    omega = _gaussian(grid)
    theta_f = _gaussian(grid, rate=0.7)
    report = lemma_Ik_check(
        witness, omega, theta_f, -2.0, np.array([0.2, 2.5, 6.0])
    )
    assert report.fitted[0] < 0.05 * report.fitted[1]
    assert report.fitted[2] < 0.05 * report.fitted[1]


def test_lemma_ik_scaling_invariance(witness, grid):
    omega = _gaussian(grid)
    theta_f = _gaussian(grid, rate=0.7)
    etas = np.array([0.3, 0.9, 1.8])
    base = lemma_Ik_check(witness, omega, theta_f, -2.0, etas)
    doubled = lemma_Ik_check(witness, omega.scaled(2.0), theta_f, -2.0, etas)
    assert np.allclose(doubled.lhs, 2.0 * base.lhs, rtol=1e-12)
    assert np.allclose(doubled.fitted, base.fitted, rtol=1e-6)


def test_lemma_ik_vacuous_on_zero_input(witness, grid):
    zero = ScalarRadialProfile(grid=grid, values=np.zeros(grid.size))
    report = lemma_Ik_check(witness, zero, _gaussian(grid), -2.0, np.array([0.5]))
    assert report.vacuous
    assert np.all(report.lhs == 0.0)
    assert "vacuous" in report.line()


# -- vc membership ------------------------------------------------------


def test_vc_membership_witness_finite(witness, grid):
    report = vc_membership_check(witness, grid)
    assert report.finite
    assert 0.0 < report.norm < math.inf
    # exponent arithmetic at the witness: l(c)+c+nu = 0
    assert report.origin_exponent == pytest.approx(2.0, abs=1e-12)
    assert report.tail_exponent == pytest.approx(-1.2, abs=1e-12)
    assert report.breakpoints[0] == pytest.approx(0.5, abs=1e-15)
    assert report.breakpoints[1] == pytest.approx(0.57735026918962576, rel=1e-14)
    assert all(c > 0.0 and math.isfinite(c) for c in report.regime_constants)
    assert "finite" in report.line()


def test_vc_membership_matches_quadrature_oracle(witness, grid):
    # mpmath reference for the full half-line integral; just over half
    # the norm mass sits beyond the grid edge, so this exercises the
    # analytic power-tail extension, whose anchor-point model is good
    # to about (a-1)/(s r_max^gamma) relative there
    report = vc_membership_check(witness, grid)
    assert report.norm == pytest.approx(7.6880915071170154, rel=2e-3)


def test_vc_membership_diverges_when_h2_fails(grid):
    # kappa = -3 empties the middle window of the second hypothesis block
    pars = Params(**{**WITNESS, "kappa": -3.0})
    assert not check_trivial_hypotheses(pars).subsystem("H2")
    report = vc_membership_check(pars, grid)
    assert not report.finite
    assert report.norm == math.inf
    assert report.origin_exponent <= -1.0
    assert "DIVERGENT" in report.line()


def test_vc_membership_independent_of_k(witness, grid):
    # l(k) + k is constant in k, so the verdict and exponents are too
    reports = [
        vc_membership_check(witness, grid, k=k) for k in (-2.5, -2.0, -1.5)
    ]
    assert all(r.finite for r in reports)
    exps = {round(r.origin_exponent, 12) for r in reports}
    assert len(exps) == 1
    tails = {round(r.tail_exponent, 12) for r in reports}
    assert len(tails) == 1


def test_vc_breakpoints_track_beta(grid):
    rep_a = vc_membership_check(Params(**WITNESS), grid)
    rep_b = vc_membership_check(Params(**{**WITNESS, "beta": 0.9}), grid)
    assert rep_a.breakpoints == (0.5, pytest.approx(3.0 ** (-0.5), rel=1e-14))
    assert rep_b.breakpoints == (0.9, pytest.approx(2.0647416048350559, rel=1e-14))
