"""Convolution routes checked against closed forms and against each other.

The Gaussian pair has the exact convolution
``(pi/2)^(d/2) exp(-|y|^2/2)`` for ``f = g = exp(-|x|^2)``, which pins
both routes independently before they are compared on random pairs.
"""

import math

import numpy as np
import pytest

from renormflow.convolve import (
    azimuthal_conv_kernel,
    brute_force_convolution,
    kernel_rho_grid,
    radial_convolution,
    so2_cancellation_residual,
)
from renormflow.fields import AzimuthalField
from renormflow.grids import RadialGrid, ScalarRadialProfile


@pytest.fixture(scope="module")
def grid():
    return RadialGrid.build()


def _gauss(r):
    return np.exp(-np.asarray(r, dtype=float) ** 2)


def _exact_gauss_conv(rho, d):
    return (math.pi / 2.0) ** (d / 2.0) * np.exp(-np.asarray(rho) ** 2 / 2.0)


@pytest.mark.parametrize("d", [2, 3])
def test_radial_convolution_gaussian_closed_form(grid, d):
    rho = np.array([0.25, 0.8, 1.7, 3.1])
    got = radial_convolution(_gauss, _gauss, rho, d=d, grid=grid)
    # radial Simpson blocks carry ~2e-6 relative error on smooth integrands
    assert np.allclose(got, _exact_gauss_conv(rho, d), rtol=5e-6)


@pytest.mark.parametrize("d", [2, 3])
def test_brute_force_gaussian_closed_form(d):
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(4, d))
    got = brute_force_convolution(_gauss, _gauss, pts, d=d)
    want = _exact_gauss_conv(np.linalg.norm(pts, axis=1), d)
    assert np.allclose(got, want, rtol=1e-6)


@pytest.mark.parametrize("d", [2, 3])
def test_reduced_matches_brute_force_on_smooth_pair(grid, d):
    rng = np.random.default_rng(17)
    a, b = rng.uniform(0.5, 1.5, size=2)
    c0, c1 = rng.uniform(-1.0, 1.0, size=2)

    def f(r):
        r = np.asarray(r, dtype=float)
        return (1.0 + c0 * r**2) * np.exp(-a * r**2)

    def g(r):
        r = np.asarray(r, dtype=float)
        return (c1 + r) * np.exp(-b * r**2)

    rho = np.array([0.4, 1.3, 2.6])
    reduced = radial_convolution(f, g, rho, d=d, grid=grid)
    # brute force at points in generic directions with those radii
    dirs = np.array([[0.6, 0.8], [-0.8, 0.6], [1.0, 0.0]], dtype=float)
    if d == 3:
        dirs = np.array(
            [[0.6, 0.48, 0.64], [-0.8, 0.6, 0.0], [0.0, 0.0, 1.0]], dtype=float
        )
    pts = dirs * rho[:, None]
    brute = brute_force_convolution(f, g, pts, d=d)
    assert np.max(np.abs(reduced - brute) / np.abs(brute)) < 1e-4


def test_radial_convolution_commutes(grid):
    def f(r):
        return np.exp(-1.3 * np.asarray(r) ** 2)

    def g(r):
        r = np.asarray(r, dtype=float)
        return r**2 * np.exp(-0.7 * r**2)

    rho = np.array([0.5, 1.5, 3.0])
    fg = radial_convolution(f, g, rho, d=2, grid=grid)
    gf = radial_convolution(g, f, rho, d=2, grid=grid)
    assert np.allclose(fg, gf, rtol=5e-6)


def test_radial_convolution_uses_profile_tails(grid):
    # both factors decay slowly, so mass past r_max is real; the profile
    # route must recover it through its analytic tail model
    def f(r):
        return np.exp(-0.25 * np.asarray(r, dtype=float))

    prof = ScalarRadialProfile.from_callable(
        lambda r: np.exp(-0.3 * r),
        grid,
        origin_power=0.0,
        tail_power=0.0,
        tail_rate=0.3,
    )
    rho = np.array([1.0])
    with_tail = radial_convolution(f, prof, rho, d=2, grid=grid)
    bare = radial_convolution(f, prof.evaluate, rho, d=2, grid=grid)
    ref = brute_force_convolution(
        f, lambda r: np.exp(-0.3 * np.asarray(r)), rho[:, None] * np.array([[1.0, 0.0]]),
        d=2, r_max=90.0, n_radial=600,
    )
    assert abs(with_tail[0] - ref[0]) < 0.1 * abs(bare[0] - ref[0])


# -- angular kernel -------------------------------------------------------


def _steep(grid, rate=1.0, power=1.0):
    # Gaussian decay: negligible past r_max, so no tail model
    return ScalarRadialProfile.from_callable(
        lambda r: r**power * np.exp(-rate * r * r),
        grid,
        origin_power=power,
    )


def _kernel_direct(field, rho, phi_e, n_w=512):
    """Independent full-angle quadrature of the angular kernel."""
    grid = field.grid
    s, sw = grid.nodes, grid.weights
    w = np.linspace(0.0, 2.0 * math.pi, n_w, endpoint=False)
    dw = 2.0 * math.pi / n_w
    q = np.sqrt(rho**2 + s[:, None] ** 2 - 2.0 * rho * s[:, None] * np.cos(w))
    alpha = np.arctan2(-s[:, None] * np.sin(w), rho - s[:, None] * np.cos(w))
    g1 = field.component_at(np.broadcast_to(s[:, None], q.shape), phi_e + w[None, :])
    g2 = field.component_at(q, phi_e + alpha)
    core = g1 * g2 * np.sin(alpha) * np.cos(w)[None, :]
    return float(np.dot(sw * s, core.sum(axis=1))) * dw


def test_kernel_vanishes_for_equivariant_field(grid):
    fld = AzimuthalField.radial(_steep(grid), dim=2)
    table = azimuthal_conv_kernel(fld, fld, kernel_rho_grid(grid, beta=0.8, n=64))
    assert table.coeffs == {}


def test_so2_cancellation_residual_small(grid):
    fld = AzimuthalField.radial(_steep(grid), dim=2)
    res = so2_cancellation_residual(fld, np.array([0.3, 1.0, 2.5]))
    assert res < 1e-6


def test_so2_cancellation_residual_three_dim(grid):
    fld = AzimuthalField.radial(_steep(grid), dim=3)
    res = so2_cancellation_residual(fld, np.array([0.5, 1.5]), n_angle=64)
    assert res < 1e-6


def _mixed_field(grid):
    return AzimuthalField.from_harmonics(
        grid,
        {
            (0, "cos"): _steep(grid, rate=1.0, power=1.0),
            (2, "cos"): _steep(grid, rate=1.2, power=1.0).scaled(0.6),
            (2, "sin"): _steep(grid, rate=0.9, power=2.0).scaled(-0.4),
        },
    )


def test_kernel_matches_direct_quadrature_at_nodes(grid):
    fld = _mixed_field(grid)
    probes = np.array([0.6, 1.4, 2.8])
    table = azimuthal_conv_kernel(fld, fld, probes, n_angle=256, harmonic_cap=8)
    for i, rho in enumerate(probes):
        for phi_e in (0.0, 0.7, 2.1):
            direct = _kernel_direct(fld, float(rho), phi_e, n_w=2048)
            assembled = 0.0
            for (n, par), vals in table.coeffs.items():
                trig = math.cos(n * phi_e) if par == "cos" else math.sin(n * phi_e)
                assembled += vals[i] * trig
            assert assembled == pytest.approx(direct, rel=1e-5, abs=1e-8)


def test_kernel_interpolators_track_direct_quadrature(grid):
    fld = _mixed_field(grid)
    table = azimuthal_conv_kernel(fld, fld, kernel_rho_grid(grid, beta=0.7), harmonic_cap=8)
    interps = table.interpolators()
    for rho in (0.6, 1.4, 2.8):
        for phi_e in (0.0, 0.7, 2.1):
            direct = _kernel_direct(fld, rho, phi_e)
            assembled = 0.0
            for (n, par), itp in interps.items():
                trig = math.cos(n * phi_e) if par == "cos" else math.sin(n * phi_e)
                assembled += float(itp(math.log(rho)))  * trig
            # monotone interpolation between table nodes costs some accuracy
            assert assembled == pytest.approx(direct, rel=1e-3, abs=1e-10)


def test_kernel_reports_truncation(grid):
    fld = AzimuthalField.from_harmonics(
        grid,
        {
            (4, "cos"): _steep(grid, rate=1.0, power=1.0),
        },
    )
    rho_tab = kernel_rho_grid(grid, beta=0.8, n=64)
    capped = azimuthal_conv_kernel(fld, fld, rho_tab, harmonic_cap=4)
    assert capped.truncated_sup > 0.0
    wide = azimuthal_conv_kernel(fld, fld, rho_tab, harmonic_cap=8)
    assert wide.truncated_sup == 0.0
