"""Auxiliary bound profiles and the convolution-integral inequality.

The nonlinear estimates rest on a family of incomplete-gamma profiles
``w_k`` together with a piecewise power envelope and the derived profile
``v_c`` whose weighted norm must be finite.  This module evaluates the
profiles exactly, cross-checks them against the defining integrals, and
measures the inequalities with fitted constants (the estimates track
constants only up to boundedness, so fits are reported, not asserted).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError
from .convolve import radial_convolution
from .fields import WeightSpec, weighted_norm
from .grids import RadialGrid, ScalarRadialProfile
from .params import Params, derived_constants
from .specfun import unit_sphere_area, upper_inc_gamma, upper_inc_gamma_diff

# largest incomplete-gamma argument evaluated directly; beyond it the
# second gamma term is below underflow and the asymptotic series is used
_ASYM_CUT = 700.0


def gamma_index(params: Params, k: float) -> float:
    """First argument of the incomplete gamma in the ``w_k`` formula.

    Raises when the index lands on a pole of the gamma function, where
    the profile family is not defined by this formula.
    """
    a = params.s * derived_constants(params).l_of_k(k) / params.gamma
    if a <= 0.0 and abs(a - round(a)) <= 1e-12:
        raise ParameterError(
            f"gamma index a={a} for k={k} is a non-positive integer (gamma pole)"
        )
    return a


def _log_upper_gamma_asym(a: float, x: float, terms: int = 10) -> float:
    """log of the upper incomplete gamma for large x.

    Uses the divergent asymptotic series truncated after ``terms``
    products; for x > 700 the truncation error is far below double
    precision.
    """
    series = 1.0
    prod = 1.0
    for n in range(1, terms):
        prod *= (a - n) / x
        series += prod
    return -x + (a - 1.0) * math.log(x) + math.log(series)


@dataclass(frozen=True)
class BoundProfile:
    """A sampled bound function together with its index and parameters."""

    profile: ScalarRadialProfile
    k: float
    params: Params

    def __call__(self, r) -> np.ndarray:
        return self.profile.evaluate(r)


def _wk_log_value(a: float, s: float, gamma: float, beta: float, r: float) -> float:
    x1 = s * r**gamma
    x2 = x1 / beta**gamma
    if x1 <= 0.0:
        return -math.inf
    if x1 > _ASYM_CUT:
        # both gamma terms underflow; subtract on the log scale
        log1 = _log_upper_gamma_asym(a, x1)
        log2 = _log_upper_gamma_asym(a, x2)
        log_diff = log1 + math.log1p(-math.exp(log2 - log1))
        return -r + log_diff / s
    diff = upper_inc_gamma_diff(a, x1, min(x2, _ASYM_CUT * 3.0))
    if diff <= 0.0:
        return -math.inf
    return -r + math.log(diff) / s


def _wk_value(a: float, s: float, gamma: float, beta: float, r: float) -> float:
    logv = _wk_log_value(a, s, gamma, beta, r)
    return math.exp(logv) if logv > -745.0 else 0.0


def wk_point(params: Params, k: float, eta: float) -> float:
    """Single-point value of the bound profile ``w_k``."""
    a = gamma_index(params, k)
    return _wk_value(a, params.s, params.gamma, params.beta, float(eta))


def wk_exact(params: Params, k: float, grid: RadialGrid) -> BoundProfile:
    """The incomplete-gamma bound profile on the grid.

    ``w_k(r) = e^-r (Gamma(a, s r^gamma) - Gamma(a, s (r/beta)^gamma))^(1/s)``
    with ``a = s l(k) / gamma``.  Near the origin the profile behaves
    like ``r^(l(k))``, which is recorded as its origin model.
    """
    a = gamma_index(params, k)
    s, g, b = params.s, params.gamma, params.beta
    vals = np.array([_wk_value(a, s, g, b, float(r)) for r in grid.nodes])
    lk = derived_constants(params).l_of_k(k)
    return BoundProfile(
        profile=ScalarRadialProfile(
            grid=grid, values=vals, origin_power=lk if lk > 0 else None
        ),
        k=k,
        params=params,
    )


def wk_defining_quadrature(
    params: Params, k: float, radii: np.ndarray, npts: int = 64
) -> np.ndarray:
    """Independent evaluation of ``w_k`` from the defining integral.

    The gamma difference equals ``s^a`` times the integral of
    ``t^(a-1) e^(-s t)`` over ``[r^gamma, (r/beta)^gamma]``; quadrature
    runs on a log axis where the integrand is smooth.
    """
    a = gamma_index(params, k)
    s, g, b = params.s, params.gamma, params.beta
    x, w = np.polynomial.legendre.leggauss(npts)
    out = np.empty(len(radii))
    for i, r in enumerate(np.asarray(radii, dtype=float)):
        lo, hi = math.log(r**g), math.log((r / b) ** g)
        u = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x
        t = np.exp(u)
        integral = 0.5 * (hi - lo) * float(np.dot(w, t**a * np.exp(-s * t)))
        out[i] = math.exp(-r) * (s**a * integral) ** (1.0 / s)
    return out


def wk_envelope(params: Params, k: float, grid: RadialGrid) -> BoundProfile:
    """Piecewise power-law envelope for ``w_k``.

    Small radii (r < beta) carry the ``r^l(k)`` branch, large radii the
    ``r^(l(k) - gamma/s)`` branch with the saturation factor.
    """
    dc = derived_constants(params)
    lk = dc.l_of_k(k)
    if lk <= 0.0:
        raise ParameterError(f"envelope requires l(k) > 0, got {lk}")
    s, g, b = params.s, params.gamma, params.beta
    r = grid.nodes
    damp = np.exp(-r - r**g)
    small = (1.0 / b ** (lk * s) - 1.0) ** (1.0 / s) * damp * r**lk
    big = (
        damp
        * r ** (lk - g / s)
        * (1.0 - np.exp(-s * (1.0 / b**g - 1.0) * r**g)) ** (1.0 / s)
    )
    vals = np.where(r < b, small, big)
    return BoundProfile(
        profile=ScalarRadialProfile(grid=grid, values=vals, origin_power=lk),
        k=k,
        params=params,
    )


@dataclass(frozen=True)
class DominationReport:
    """Pointwise comparison of the exact profile against its envelope."""

    dominated: bool
    max_ratio: float
    worst_radius: float
    fitted_constant: float
    small_regime_ratio: float
    large_regime_ratio: float

    def line(self) -> str:
        flag = "pass" if self.dominated else "FAIL"
        return (
            f"envelope domination {flag}: max exact/envelope = "
            f"{self.max_ratio:.6g} at r = {self.worst_radius:.6g} "
            f"(fitted constant {self.fitted_constant:.6g})"
        )


def envelope_domination(params: Params, k: float, grid: RadialGrid) -> DominationReport:
    """Measure ``w_k <= envelope`` pointwise on the grid.

    The ratio of the two sides is reported per regime; the fitted
    constant is the smallest multiple of the envelope that dominates.
    """
    exact = wk_exact(params, k, grid).profile.values
    env = wk_envelope(params, k, grid).profile.values
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(env > 0.0, exact / env, np.where(exact > 0.0, np.inf, 0.0))
    idx = int(np.argmax(ratio))
    small_mask = grid.nodes < params.beta
    small = float(np.max(ratio[small_mask])) if small_mask.any() else 0.0
    large = float(np.max(ratio[~small_mask])) if (~small_mask).any() else 0.0
    max_ratio = float(ratio[idx])
    return DominationReport(
        dominated=bool(max_ratio <= 1.0),
        max_ratio=max_ratio,
        worst_radius=float(grid.nodes[idx]),
        fitted_constant=max(max_ratio, 1.0),
        small_regime_ratio=small,
        large_regime_ratio=large,
    )


@dataclass(frozen=True)
class IkReport:
    """Fitted-constant report for the convolution-integral inequality."""

    radii: np.ndarray
    lhs: np.ndarray
    rhs_unit: np.ndarray
    fitted: np.ndarray
    c_fit: float
    vacuous: bool

    def line(self) -> str:
        if self.vacuous:
            return "integral inequality vacuous: zero norms"
        return (
            f"integral inequality: fitted C in "
            f"[{np.min(self.fitted):.6g}, {self.c_fit:.6g}] over "
            f"{len(self.radii)} radii"
        )


def lemma_Ik_check(
    params: Params,
    omega: ScalarRadialProfile,
    theta_f: ScalarRadialProfile,
    k: float,
    eta_samples: np.ndarray,
    n_t: int = 32,
) -> IkReport:
    """Evaluate both sides of the convolution-integral inequality.

    The left side is the windowed radial integral of
    ``e^(-y^gamma) y^(-k) (|omega| * |theta|)(y)``; the right side is
    ``w_k`` times the product of weighted norms, with the proportionality
    constant fitted per sample.
    """
    grid = omega.grid
    d, b = params.d, params.beta
    w_unit = WeightSpec.physical(params.nu)
    abs_omega = ScalarRadialProfile(
        grid=grid,
        values=np.abs(omega.values),
        origin_power=omega.origin_power,
        tail_power=omega.tail_power,
        tail_rate=omega.tail_rate,
    )
    abs_theta = ScalarRadialProfile(
        grid=grid,
        values=np.abs(theta_f.values),
        origin_power=theta_f.origin_power,
        tail_power=theta_f.tail_power,
        tail_rate=theta_f.tail_rate,
    )
    norm_o = weighted_norm(abs_omega, w_unit, params.p, dim=d)
    norm_t = weighted_norm(abs_theta, w_unit, params.p, dim=d)
    wk = wk_exact(params, k, grid)

    eta_samples = np.asarray(eta_samples, dtype=float)
    x, wq = np.polynomial.legendre.leggauss(n_t)
    lhs = np.empty(eta_samples.shape)
    for i, eta in enumerate(eta_samples):
        lo, hi = eta, eta / b
        y = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x
        conv = radial_convolution(abs_omega, abs_theta, y, d=d, grid=grid)
        core = np.exp(-(y**params.gamma)) * y ** (-k) * conv
        lhs[i] = 0.5 * (hi - lo) * float(np.dot(wq, core))

    rhs_unit = wk(eta_samples) * norm_o * norm_t
    vacuous = bool(np.all(rhs_unit == 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        fitted = np.where(rhs_unit > 0.0, lhs / rhs_unit, np.nan)
    c_fit = float(np.nanmax(fitted)) if not vacuous else math.nan
    return IkReport(
        radii=eta_samples,
        lhs=lhs,
        rhs_unit=rhs_unit,
        fitted=fitted,
        c_fit=c_fit,
        vacuous=vacuous,
    )


@dataclass(frozen=True)
class VcReport:
    """Finiteness and regime structure of the derived profile norm."""

    norm: float
    finite: bool
    origin_exponent: float
    tail_exponent: float
    breakpoints: tuple[float, float]
    regime_constants: tuple[float, float, float]

    def line(self) -> str:
        flag = "finite" if self.finite else "DIVERGENT"
        return (
            f"profile norm {flag}: {self.norm:.6g}; breakpoints "
            f"{self.breakpoints[0]:.6g}, {self.breakpoints[1]:.6g}; fitted "
            f"regime constants {self.regime_constants}"
        )


def vc_membership_check(
    params: Params, grid: RadialGrid, k: float | None = None
) -> VcReport:
    """Weighted-norm finiteness of ``w_k e^(r^gamma) r^k`` (default k = c).

    The norm integrand is a pure power near the origin and at infinity;
    both exponents are computed and the analytic continuations replace
    the missing mass outside the grid.  A non-integrable exponent on
    either side marks the norm divergent.  The combination ``l(k) + k``
    does not depend on k, so neither does the verdict.  The piecewise
    power bound is compared per regime with fitted constants.
    """
    pr = params
    dc = derived_constants(params)
    if k is None:
        k = pr.c
    lc = dc.l_of_k(k)
    s, g, b, p, d = pr.s, pr.gamma, pr.beta, pr.p, pr.d

    a = gamma_index(params, k)
    r = grid.nodes
    # v_k = w_k e^(r^gamma + r) r^(k+nu), assembled in log space so the
    # exponential growth cancels against w_k's decay before exponentiating
    log_wk = np.array([_wk_log_value(a, s, g, b, float(x)) for x in r])
    log_vc = log_wk + r**g + r + (k + pr.nu) * np.log(r)
    vc = np.exp(log_vc)

    integrand = vc**p * r ** (d - 1)
    core = float(np.dot(grid.weights, integrand)) - grid.r_min * integrand[0]

    q_origin = p * (lc + k + pr.nu) + d - 1.0
    q_tail = p * (lc + k + pr.nu - g / s) + d - 1.0
    origin_ok = q_origin > -1.0
    tail_ok = q_tail < -1.0
    origin_part = (
        integrand[0] * grid.r_min / (q_origin + 1.0) if origin_ok else math.inf
    )
    tail_part = (
        integrand[-1] * grid.r_max / (-q_tail - 1.0) if tail_ok else math.inf
    )
    finite = origin_ok and tail_ok
    area = unit_sphere_area(d)
    norm = (
        (area * (core + origin_part + tail_part)) ** (1.0 / p)
        if finite
        else math.inf
    )

    mid_break = (1.0 / b**g - 1.0) ** (-1.0 / g)
    small = r < b
    middle = (r >= b) & (r <= mid_break)
    large = r > mid_break

    def regime_const(mask: np.ndarray) -> float:
        # the piecewise power bound requires l(k) > 0
        if lc <= 0.0:
            return math.nan
        if not mask.any():
            return 0.0
        rm = r[mask]
        bound = np.where(
            rm < b,
            (1.0 / b ** (lc * s) - 1.0) ** (1.0 / s) * rm ** (lc + k + pr.nu),
            np.where(
                rm <= mid_break,
                (1.0 / b**g - 1.0) ** (1.0 / s) * rm ** (lc + k + pr.nu),
                rm ** (lc + k + pr.nu - g / s),
            ),
        )
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(bound > 0.0, vc[mask] / bound, 0.0)
        return float(np.max(ratio))

    return VcReport(
        norm=norm,
        finite=finite,
        origin_exponent=q_origin,
        tail_exponent=q_tail,
        breakpoints=(b, mid_break),
        regime_constants=(
            regime_const(small),
            regime_const(middle),
            regime_const(large),
        ),
    )
