"""Field-layer checks: grids, profiles, norms, envelopes, functionals.

Closed-form references were derived by hand and confirmed with mpmath
quadrature at 25 digits before the implementation existed.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renormflow.exceptions import ParameterError
from renormflow.fields import (
    AzimuthalField,
    EnvelopeSpec,
    I_functional,
    WeightSpec,
    envelope_check,
    holder_modulus,
    member_M_mu,
    tail_norm,
    weighted_norm,
)
from renormflow.grids import RadialGrid, ScalarRadialProfile


@pytest.fixture(scope="module")
def grid():
    return RadialGrid.build()


def _exp_profile(grid, rate=1.0, power=0.0):
    return ScalarRadialProfile.from_callable(
        lambda r: np.exp(power * np.log(r) - rate * r),
        grid,
        origin_power=power,
        tail_power=power,
        tail_rate=rate,
    )


# -- grid ---------------------------------------------------------------


def test_grid_weights_sum_to_length(grid):
    # integral of 1 over [0, r_max]
    assert float(np.sum(grid.weights)) == pytest.approx(grid.r_max, rel=1e-8)


def test_grid_integrates_smooth_functions(grid):
    # int_0^20 e^-r dr and int_0^20 r e^-r dr; composite Simpson with the
    # stock block sizes is good to a few parts in 1e6 on unit-scale decay
    got = grid.integrate(np.exp(-grid.nodes))
    assert got == pytest.approx(1.0, rel=3e-6)
    got = grid.integrate(grid.nodes * np.exp(-grid.nodes))
    assert got == pytest.approx(1.0, rel=3e-6)


def test_grid_resolves_integrable_singularity(grid):
    # int_0^inf r^-0.9 e^-5r dr = Gamma(0.1)/5^0.1 (truncation past 20 is ~1e-45);
    # grid weights handle [r_min, r_max], the origin stub is refined analytically
    # origin-stub refinement pins the power-law amplitude at the first node,
    # which carries an O(rate * r_min) relative bias on the stub piece
    vals = grid.nodes**-0.9 * np.exp(-5.0 * grid.nodes)
    core = float(np.dot(grid.weights, vals)) - grid.r_min * vals[0]
    origin = vals[0] * grid.r_min / 0.1
    assert core + origin == pytest.approx(8.099228907085526, rel=5e-4)


# -- profiles -----------------------------------------------------------


def test_profile_roundtrip_and_models(grid):
    prof = _exp_profile(grid, rate=2.0, power=-0.5)
    assert np.allclose(prof.evaluate(grid.nodes), prof.values)
    # interpolation between nodes: monotone cubic is third order where its
    # limiter engages, so a few 1e-4 relative on the coarse linear block
    r_mid = np.sqrt(grid.nodes[3:-3] * grid.nodes[4:-2])
    exact = np.exp(-0.5 * np.log(r_mid) - 2.0 * r_mid)
    rel = np.abs(prof.evaluate(r_mid) - exact) / (exact + 1e-300)
    assert np.max(rel[exact > 1e-12]) < 1e-3
    # analytic continuation below and above the grid; the origin amplitude
    # is pinned at the first node, so it carries the exp(-rate*r_min) factor
    assert prof.evaluate(1e-6) == pytest.approx(1e-6**-0.5, rel=5e-4)
    assert prof.evaluate(25.0) == pytest.approx(25.0**-0.5 * math.exp(-50.0), rel=1e-9)


def test_profile_tail_integral_matches_gamma(grid):
    prof = _exp_profile(grid, rate=1.5, power=1.0)
    # int_20^inf r * e^-1.5r * r dr with extra power 1
    import mpmath as mp

    ref = float(mp.quad(lambda r: r**2 * mp.e ** (-1.5 * r), [20, mp.inf]))
    assert prof.tail_integral(extra_power=1.0) == pytest.approx(ref, rel=1e-10)


def test_profile_sign_change_no_overshoot(grid):
    vals = np.sin(grid.nodes)
    prof = ScalarRadialProfile(grid=grid, values=vals)
    r = np.linspace(2.9, 3.4, 200)
    got = prof.evaluate(r)
    assert np.max(np.abs(got - np.sin(r))) < 5e-3


# -- weighted norms -----------------------------------------------------


def test_weighted_norm_physical_weight_closed_form(grid):
    prof = _exp_profile(grid, rate=2.0)
    w = WeightSpec.physical(0.0)
    assert weighted_norm(prof, w, p=1, dim=2) == pytest.approx(
        2.0 * math.pi, rel=1e-6
    )


def test_weighted_norm_fourier_weight_closed_form(grid):
    b = 1.0
    prof = _exp_profile(grid, rate=b)
    w = WeightSpec.fourier(0.0, b=b)
    assert weighted_norm(prof, w, p=2, dim=2) == pytest.approx(
        math.sqrt(2.0 * math.pi) / b, rel=1e-6
    )


def test_weighted_norm_three_dim(grid):
    prof = _exp_profile(grid, rate=1.1)
    w = WeightSpec.fourier(0.3, b=0.8)
    # 4 pi Gamma(3.6) / 1.4^3.6, mpmath dps=25
    assert weighted_norm(prof, w, p=2, dim=3) == pytest.approx(
        3.7296848961925246, rel=1e-6
    )


def test_weighted_norm_harmonic_field(grid):
    prof = _exp_profile(grid)
    fld = AzimuthalField.from_harmonics(
        grid, {(0, "cos"): prof, (2, "cos"): prof.scaled(0.5)}
    )
    w = WeightSpec.plain_power(0.0)
    # sqrt(1/4 * 2 pi * 1.125), by Parseval in the angle
    assert weighted_norm(fld, w, p=2) == pytest.approx(1.329340388179137, rel=1e-6)


def test_weighted_norm_divergent_tail_is_inf(grid):
    prof = _exp_profile(grid, rate=0.4)
    w = WeightSpec.physical(0.0)  # weight grows like e^r, field decays e^-0.4r
    assert weighted_norm(prof, w, p=1, dim=2) == math.inf


@given(c=st.floats(-5.0, 5.0).filter(lambda v: abs(v) > 1e-3))
@settings(max_examples=30, deadline=None)
def test_weighted_norm_homogeneous(c):
    grid = RadialGrid.build()
    prof = _exp_profile(grid)
    w = WeightSpec.fourier(0.2, b=0.5)
    n1 = weighted_norm(prof, w, p=2, dim=2)
    n2 = weighted_norm(prof.scaled(c), w, p=2, dim=2)
    assert n2 == pytest.approx(abs(c) * n1, rel=1e-10)


def test_weighted_norm_triangle(grid):
    w = WeightSpec.fourier(0.2, b=0.5)
    f1 = AzimuthalField.radial(_exp_profile(grid, rate=1.0), dim=2)
    f2 = AzimuthalField.from_harmonics(
        grid, {(2, "sin"): _exp_profile(grid, rate=1.4)}
    )
    lhs = weighted_norm(f1.axpy(1.0, f2), w, p=2)
    rhs = weighted_norm(f1, w, p=2) + weighted_norm(f2, w, p=2)
    assert lhs <= rhs * (1.0 + 1e-12)


# -- tail norms ---------------------------------------------------------


def test_tail_norm_closed_form(grid):
    prof = _exp_profile(grid, rate=2.0)
    w = WeightSpec.physical(0.0)
    # 2 pi int_1^inf r e^-r dr = 4 pi / e
    assert tail_norm(prof, w, p=1, rho=1.0, dim=2) == pytest.approx(
        4.0 * math.pi / math.e, rel=1e-4
    )


def test_tail_norm_monotone_and_bounded(grid):
    prof = _exp_profile(grid, rate=2.0)
    w = WeightSpec.physical(0.0)
    full = weighted_norm(prof, w, p=2, dim=2)
    rhos = [0.3, 1.0, 3.0, 8.0, 15.0, 25.0]
    vals = [tail_norm(prof, w, p=2, rho=rho, dim=2) for rho in rhos]
    assert all(v <= full * (1.0 + 1e-6) for v in vals)
    for lo, hi in zip(vals[1:], vals[:-1]):
        assert lo <= hi * (1.0 + 1e-9)


# -- functional ---------------------------------------------------------


def test_I_functional_reference(grid):
    fld = AzimuthalField.radial(_exp_profile(grid), dim=2)
    # 2 pi int e^{-r^2 - r} r^{1/2} dr, mpmath dps=25
    assert I_functional(fld, alpha=-0.5, gamma=2.0) == pytest.approx(
        2.0116063261402396, rel=1e-6
    )


def test_I_functional_reads_only_mean_harmonic(grid):
    prof = _exp_profile(grid)
    base = AzimuthalField.radial(prof, dim=2)
    decorated = AzimuthalField.from_harmonics(
        grid, {(0, "cos"): prof, (2, "cos"): prof, (4, "sin"): prof.scaled(-2.0)}
    )
    a = I_functional(base, alpha=-0.5, gamma=2.0)
    b = I_functional(decorated, alpha=-0.5, gamma=2.0)
    assert a == pytest.approx(b, rel=1e-12)


def test_I_functional_linear(grid):
    f1 = AzimuthalField.radial(_exp_profile(grid, rate=1.0), dim=2)
    f2 = AzimuthalField.radial(_exp_profile(grid, rate=2.0), dim=2)
    a = I_functional(f1, alpha=-0.3, gamma=2.0)
    b = I_functional(f2, alpha=-0.3, gamma=2.0)
    combo = I_functional(f1.axpy(0.7, f2), alpha=-0.3, gamma=2.0)
    assert combo == pytest.approx(a + 0.7 * b, rel=1e-9)


# -- envelope and members ------------------------------------------------


def test_envelope_check_accepts_and_rejects(grid):
    env = EnvelopeSpec(k=0.1, sigma=-0.5, decay=1.0)
    inside = AzimuthalField.radial(env.profile(grid), dim=2).scale(0.7)
    outside = AzimuthalField.radial(env.profile(grid), dim=2).scale(1.3)
    rep_in = envelope_check(inside, env)
    rep_out = envelope_check(outside, env)
    assert rep_in.ok and rep_in.max_ratio == pytest.approx(0.7, rel=1e-9)
    assert not rep_out.ok and rep_out.max_ratio == pytest.approx(1.3, rel=1e-9)


def test_envelope_check_sees_tail_violation(grid):
    env = EnvelopeSpec(k=1.0, sigma=-0.5, decay=1.0)
    # slower decay than the envelope: inside on the grid is not enough
    slow = ScalarRadialProfile.from_callable(
        lambda r: 1e-3 * np.exp(-0.2 * r),
        grid,
        origin_power=0.0,
        tail_power=0.0,
        tail_rate=0.2,
    )
    rep = envelope_check(AzimuthalField.radial(slow, dim=2), env)
    assert not rep.ok


def test_member_M_mu_is_valid_member(grid):
    env = EnvelopeSpec(k=0.1, sigma=-0.5, decay=1.0)
    alpha, gamma = -1.75, 3.0
    fld = member_M_mu(env, alpha=alpha, mu=1e-3, gamma=gamma, grid=grid, dim=2)
    assert envelope_check(fld, env).ok
    assert I_functional(fld, alpha, gamma) >= 1e-3


def test_member_M_mu_infeasible_target_raises(grid):
    env = EnvelopeSpec(k=0.1, sigma=-0.5, decay=1.0)
    with pytest.raises(ParameterError):
        member_M_mu(env, alpha=-1.75, mu=1e6, gamma=3.0, grid=grid, dim=2)


# -- Hoelder modulus -----------------------------------------------------


def test_holder_modulus_smooth_field_finite(grid):
    fld = AzimuthalField.radial(_exp_profile(grid, rate=1.0, power=1.0), dim=2)
    rep = holder_modulus(fld, theta=0.5, weight=WeightSpec.plain_power(0.0), p=2)
    assert rep.K > 0.0 and math.isfinite(rep.K)
    # smooth field: ratio ~ |delta|^{1-theta}, so the largest delta dominates
    mags = sorted({row[0] for row in rep.table}, reverse=True)
    by_mag = {m: max(r for d, _, r in rep.table if d == m) for m in mags}
    assert by_mag[mags[0]] >= by_mag[mags[-1]]


# -- vector geometry ------------------------------------------------------


def test_vector_field_is_azimuthal_and_odd(grid):
    fld = AzimuthalField.from_harmonics(
        grid,
        {(0, "cos"): _exp_profile(grid), (2, "sin"): _exp_profile(grid, rate=1.3)},
    )
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(40, 2)) * 2.0
    vals = fld.vector_at(pts)
    dots = np.sum(vals * pts, axis=1)
    assert np.max(np.abs(dots)) < 1e-12 * np.max(np.linalg.norm(vals, axis=1) + 1e-30)
    odd = fld.vector_at(-pts)
    assert np.allclose(odd, -vals, atol=1e-13)


def test_vector_field_three_dim_axial(grid):
    fld = AzimuthalField.radial(_exp_profile(grid), dim=3)
    rng = np.random.default_rng(11)
    pts = rng.normal(size=(30, 3))
    vals = fld.vector_at(pts)
    # orthogonal to both the position and the symmetry axis
    assert np.max(np.abs(np.sum(vals * pts, axis=1))) < 1e-12
    assert np.max(np.abs(vals[:, 2])) == 0.0
    assert np.allclose(fld.vector_at(-pts), -vals, atol=1e-13)
