"""Convolution machinery: zonal reduction, angular kernels, brute force.

Three routes with very different trust profiles live here. The reduced
radial convolution collapses the angular integral of a zonal pair to a
weighted one-dimensional integral. The azimuthal kernel tabulates the
angular part of the quadratic term for azimuthal fields, harmonic pair
by harmonic pair, keeping only the combinations that survive the
reflection parity of the relative angle. The brute-force route
integrates over the full space with no symmetry input at all and exists
so the other two can be checked against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .exceptions import ParameterError
from .fields import AzimuthalField, HarmonicKey, polar_quadrature
from .grids import RadialGrid, ScalarRadialProfile
from .specfun import unit_sphere_area


def _radial_quadrature(
    grid: RadialGrid, profile: ScalarRadialProfile | None
) -> tuple[np.ndarray, np.ndarray]:
    # grid nodes plus analytic-tail nodes when the integrand survives r_max
    nodes, weights = grid.nodes, grid.weights
    if (
        profile is not None
        and profile.tail_power is not None
        and profile.tail_rate > 0.0
        and abs(float(profile.values[-1])) > 0.0
    ):
        tr, tw = grid.tail_nodes(profile.tail_rate)
        nodes = np.concatenate([nodes, tr])
        weights = np.concatenate([weights, tw])
    return nodes, weights


def radial_convolution(
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    rho,
    d: int,
    grid: RadialGrid,
    n_angle: int = 64,
) -> np.ndarray:
    """Convolution of two zonal functions evaluated at radii ``rho``.

    Computes ``(f * g)(y)`` for ``|y| = rho`` through the reduction::

        area(S^{d-2}) * int_0^inf g(s) s^{d-1}
            int_0^pi f(sqrt(rho^2+s^2-2 rho s cos w)) sin(w)^{d-2} dw ds

    ``f`` and ``g`` may be plain callables or radial profiles; profiles
    contribute their analytic tail quadrature beyond the grid.
    """
    if d < 2:
        raise ParameterError(f"dimension must be >= 2, got {d}")
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    s, sw = _radial_quadrature(grid, g if isinstance(g, ScalarRadialProfile) else None)

    x, xw = np.polynomial.legendre.leggauss(n_angle)
    w = 0.5 * math.pi * (x + 1.0)
    ww = 0.5 * math.pi * xw * np.sin(w) ** (d - 2)

    g_s = np.asarray(g(s), dtype=float)
    ring = unit_sphere_area(d - 1)
    out = np.empty(rho.shape)
    cos_w = np.cos(w)
    for i, r in enumerate(rho):
        q = np.sqrt(np.maximum(r * r + s[:, None] ** 2 - 2.0 * r * s[:, None] * cos_w, 0.0))
        inner = np.asarray(f(q), dtype=float) @ ww
        out[i] = ring * float(np.dot(sw, g_s * s ** (d - 1) * inner))
    return out


def brute_force_convolution(
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    points: np.ndarray,
    d: int,
    r_max: float = 20.0,
    n_radial: int = 240,
    n_angle: int = 256,
) -> np.ndarray:
    """Direct full-space convolution of zonal functions at Cartesian points.

    No zonal reduction: the integral runs over a product quadrature of
    the whole ball of radius ``r_max``. Slow by design; this is the
    reference route.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != d:
        raise ParameterError("points do not match the dimension")
    x, xw = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * r_max * (x + 1.0)
    rw = 0.5 * r_max * xw

    if d == 2:
        phi = np.linspace(0.0, 2.0 * math.pi, n_angle, endpoint=False)
        cloud = np.stack(
            [np.outer(r, np.cos(phi)).ravel(), np.outer(r, np.sin(phi)).ravel()],
            axis=1,
        )
        cw = np.outer(rw * r, np.full(phi.size, 2.0 * math.pi / phi.size)).ravel()
    elif d == 3:
        th, thw = polar_quadrature(max(32, n_angle // 4))
        phi = np.linspace(0.0, 2.0 * math.pi, max(48, n_angle // 2), endpoint=False)
        st, ct = np.sin(th), np.cos(th)
        u = np.stack(
            [
                np.outer(st, np.cos(phi)).ravel(),
                np.outer(st, np.sin(phi)).ravel(),
                np.repeat(ct, phi.size),
            ],
            axis=1,
        )
        uw = np.repeat(thw * st, phi.size) * (2.0 * math.pi / phi.size)
        cloud = (r[:, None, None] * u[None, :, :]).reshape(-1, d)
        cw = (np.outer(rw * r * r, uw)).ravel()
    else:
        raise ParameterError("brute force supports d in {2, 3}")

    g_vals = np.asarray(g(np.linalg.norm(cloud, axis=1)), dtype=float)
    out = np.empty(len(pts))
    for i, y in enumerate(pts):
        dist = np.linalg.norm(cloud - y, axis=1)
        out[i] = float(np.dot(cw, g_vals * np.asarray(f(dist), dtype=float)))
    return out


# ---------------------------------------------------------------------------
# azimuthal angular kernel
# ---------------------------------------------------------------------------


def _trig_product(
    p1: str, n1: int, p2: str, n2: int
) -> list[tuple[str, int, float]]:
    """Expand a product of two trig factors into harmonics.

    Factor 1 is ``cos/sin(n1 * phi)``, factor 2 likewise; the result is
    a list of ``(parity, degree, coefficient)`` with degrees normalized
    to be non-negative and ``(sin, 0)`` terms dropped.
    """

    def norm(par: str, n: int, c: float) -> tuple[str, int, float] | None:
        if n < 0:
            n = -n
            if par == "sin":
                c = -c
        if par == "sin" and n == 0:
            return None
        return (par, n, c)

    if p1 == "cos" and p2 == "cos":
        raw = [("cos", n1 - n2, 0.5), ("cos", n1 + n2, 0.5)]
    elif p1 == "sin" and p2 == "sin":
        raw = [("cos", n1 - n2, 0.5), ("cos", n1 + n2, -0.5)]
    elif p1 == "sin" and p2 == "cos":
        raw = [("sin", n1 - n2, 0.5), ("sin", n1 + n2, 0.5)]
    else:  # cos * sin
        raw = [("sin", n1 + n2, 0.5), ("sin", n1 - n2, -0.5)]
    out = []
    for par, n, c in raw:
        item = norm(par, n, c)
        if item is not None:
            out.append(item)
    return out


def _relative_frame_factors(key: HarmonicKey) -> dict[str, list[tuple[str, int, float]]]:
    """Coefficients of ``cos(n w)`` and ``sin(n w)`` in the rotated frame.

    A stored harmonic evaluated at absolute angle ``phi_e + w`` splits
    into relative-angle harmonics with direction-dependent trig factors:
    this returns, for the ``cos(n w)`` and ``sin(n w)`` parts, the trig
    function of ``phi_e`` each one carries.
    """
    n, par = key
    if par == "cos":
        return {"cos": [("cos", n, 1.0)], "sin": [("sin", n, -1.0)]}
    return {"cos": [("sin", n, 1.0)], "sin": [("cos", n, 1.0)]}


@dataclass(frozen=True)
class KernelTable:
    """Harmonic decomposition of the quadratic angular kernel.

    ``coeffs[key]`` holds the coefficient profile of the output harmonic
    ``key`` on the radii ``rho``; ``truncated_sup`` reports the largest
    absolute coefficient value that fell above the harmonic cap and was
    dropped.
    """

    rho: np.ndarray
    coeffs: dict[HarmonicKey, np.ndarray]
    truncated_sup: float

    def interpolators(self) -> dict[HarmonicKey, PchipInterpolator]:
        # flat tabulation segments overflow the slope weights internally;
        # the resulting zero derivatives are the intended behavior
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return {
                k: PchipInterpolator(np.log(self.rho), v, extrapolate=True)
                for k, v in self.coeffs.items()
            }


def kernel_rho_grid(grid: RadialGrid, beta: float, n: int = 640) -> np.ndarray:
    """Log-spaced tabulation radii covering ``[r_min, r_max / beta]``."""
    return np.geomspace(grid.r_min, grid.r_max / beta, n)


def azimuthal_conv_kernel(
    field1: AzimuthalField,
    field2: AzimuthalField,
    rho: np.ndarray,
    n_angle: int = 64,
    harmonic_cap: int = 4,
    chunk: int = 64,
) -> KernelTable:
    """Angular kernel of the quadratic term for two-dimensional fields.

    For each tabulation radius ``rho`` this evaluates::

        W(rho e) = integral g1(x) g2(rho e - x) cos(w) sin(a) dx

    where ``w`` and ``a`` are the angles of ``x`` and ``rho e - x``
    relative to the direction ``e``, and returns the decomposition of
    ``W`` into even harmonics of the direction angle. Terms whose
    relative-angle integrand is odd under ``w -> -w`` vanish exactly and
    are never computed; the surviving ones are integrated on
    ``[0, pi]`` and doubled.

    Equivariant input pairs produce an identically zero table here by
    that parity; the independent full-angle measurement of the same
    cancellation lives in ``so2_cancellation_residual``.
    """
    if field1.dim != 2 or field2.dim != 2:
        raise ParameterError("harmonic kernel tabulation is two-dimensional")
    rho = np.asarray(rho, dtype=float)

    x, xw = np.polynomial.legendre.leggauss(n_angle)
    w = 0.5 * math.pi * (x + 1.0)
    ww = 0.5 * math.pi * xw
    cos_w, sin_w = np.cos(w), np.sin(w)

    grid = field1.grid
    accum: dict[HarmonicKey, np.ndarray] = {}
    truncated = 0.0

    # outer-factor harmonics grouped by their radial rule (the rule only
    # depends on the tail model), so the chunk geometry and the inner
    # profile evaluations are computed once per group, not once per pair
    groups: dict[tuple, tuple] = {}
    for key1, prof1 in field1.harmonics.items():
        s, sw = _radial_quadrature(grid, prof1)
        sig = (s.size, float(s[-1]))
        groups.setdefault(sig, (s, sw, []))[2].append((key1, prof1))

    for s, sw, members in groups.values():
        ss = s[None, :, None]
        s_facs = {
            key1: np.asarray(prof1.evaluate(s), dtype=float) * s * sw
            for key1, prof1 in members
        }
        for start in range(0, rho.size, chunk):
            rr = rho[start : start + chunk][:, None, None]
            q = np.sqrt(
                np.maximum(rr**2 + ss**2 - 2.0 * rr * ss * cos_w[None, None, :], 0.0)
            )
            alpha = np.arctan2(-ss * sin_w[None, None, :], rr - ss * cos_w[None, None, :])
            sin_alpha = np.sin(alpha)
            for key2, prof2 in field2.harmonics.items():
                n2, _ = key2
                frame2 = _relative_frame_factors(key2)
                base = prof2.evaluate(q) * sin_alpha  # shared integrand factor
                rel2_parts = {}
                if n2 == 0:
                    rel2_parts["cos"] = base
                else:
                    rel2_parts["cos"] = base * np.cos(n2 * alpha)
                    rel2_parts["sin"] = base * np.sin(n2 * alpha)
                for key1, _ in members:
                    n1, _ = key1
                    frame1 = _relative_frame_factors(key1)
                    # relative-angle parts that survive w-parity:
                    #   cos(n1 w) * sin(n2 a)  and  sin(n1 w) * cos(n2 a)
                    for rel1, rel2 in (("cos", "sin"), ("sin", "cos")):
                        if rel2 == "sin" and n2 == 0:
                            continue
                        if rel1 == "sin" and n1 == 0:
                            continue
                        t1 = np.cos(n1 * w) if rel1 == "cos" else np.sin(n1 * w)
                        vals = 2.0 * np.einsum(
                            "csw,s,w->c", rel2_parts[rel2], s_facs[key1], ww * cos_w * t1
                        )
                        # direction-angle harmonics carried by this term
                        for pf1, nf1, cf1 in frame1[rel1]:
                            for pf2, nf2, cf2 in frame2[rel2]:
                                for par, deg, cc in _trig_product(pf1, nf1, pf2, nf2):
                                    coeff = cf1 * cf2 * cc
                                    if deg > harmonic_cap:
                                        truncated = max(
                                            truncated,
                                            float(np.max(np.abs(coeff * vals))),
                                        )
                                        continue
                                    okey = (deg, par)
                                    if okey == (0, "sin"):
                                        continue
                                    if okey not in accum:
                                        accum[okey] = np.zeros(rho.size)
                                    accum[okey][start : start + chunk] += coeff * vals
    # drop exact zeros
    accum = {
        k: v for k, v in accum.items() if float(np.max(np.abs(v))) > 0.0
    }
    return KernelTable(rho=rho, coeffs=accum, truncated_sup=truncated)


def _angular_parts_2d(
    field_: AzimuthalField,
    rho_values: np.ndarray,
    directions: np.ndarray,
    n_angle: int,
) -> tuple[np.ndarray, np.ndarray]:
    s, sw = _radial_quadrature(field_.grid, list(field_.harmonics.values())[0])
    w = np.linspace(0.0, 2.0 * math.pi, n_angle, endpoint=False)
    dw = 2.0 * math.pi / n_angle
    num = np.zeros((directions.size, rho_values.size))
    den = np.zeros_like(num)
    for j, phi_e in enumerate(directions):
        for i, r in enumerate(rho_values):
            q = np.sqrt(
                np.maximum(r * r + s[:, None] ** 2 - 2.0 * r * s[:, None] * np.cos(w), 0.0)
            )
            alpha = np.arctan2(
                -s[:, None] * np.sin(w), r - s[:, None] * np.cos(w)
            )
            g1 = field_.component_at(
                np.broadcast_to(s[:, None], q.shape), phi_e + w[None, :]
            )
            g2 = field_.component_at(q, phi_e + alpha)
            core = g1 * g2 * np.sin(alpha) * np.cos(w)[None, :]
            num[j, i] = float(np.dot(sw * s, core.sum(axis=1))) * dw
            den[j, i] = float(np.dot(sw * s, np.abs(core).sum(axis=1))) * dw
    return num, den


def _angular_parts_3d(
    field_: AzimuthalField,
    rho_values: np.ndarray,
    theta_es: np.ndarray,
    n_angle: int,
) -> tuple[np.ndarray, np.ndarray]:
    s, sw = _radial_quadrature(field_.grid, field_.polar_profiles[0])
    th, thw = polar_quadrature(32)
    ph = np.linspace(0.0, 2.0 * math.pi, n_angle, endpoint=False)
    dph = 2.0 * math.pi / n_angle
    st, ct = np.sin(th), np.cos(th)
    # unit vectors of the x-integration sphere
    ux = np.outer(st, np.cos(ph))
    uy = np.outer(st, np.sin(ph))
    uz = np.repeat(ct[:, None], ph.size, axis=1)
    ang_w = (thw * st)[:, None] * dph
    num = np.zeros((theta_es.size, rho_values.size))
    den = np.zeros_like(num)
    for j, theta_e in enumerate(theta_es):
        e = np.array([math.sin(theta_e), 0.0, math.cos(theta_e)])
        for i, r in enumerate(rho_values):
            for si, swi in zip(s, sw):
                xx, xy, xz = si * ux, si * uy, si * uz
                zx, zy, zz = r * e[0] - xx, r * e[1] - xy, r * e[2] - xz
                qz = np.sqrt(zx**2 + zy**2 + zz**2)
                th_x = np.arctan2(np.hypot(xx, xy), xz)
                th_z = np.arctan2(np.hypot(zx, zy), zz)
                g1 = field_.component_at(np.full_like(xx, si), th_x)
                g2 = field_.component_at(qz, th_z)
                # azimuthal angles relative to the direction's azimuth (0)
                cos_rel_x = np.cos(np.arctan2(xy, xx))
                sin_rel_z = np.sin(np.arctan2(zy, zx))
                core = g1 * g2 * cos_rel_x * sin_rel_z * ang_w * si * si
                num[j, i] += swi * float(np.sum(core))
                den[j, i] += swi * float(np.sum(np.abs(core)))
    return num, den


def angular_kernel_parts(
    field_: AzimuthalField,
    rho_values: np.ndarray,
    n_angle: int = 128,
    directions: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Full-angle quadratic kernel and its absolute-value companion.

    Evaluates the angular kernel of the pair ``(field_, field_)`` with
    no parity shortcut: the relative angle runs over the whole circle
    (sphere product for d=3). Returns two arrays of shape
    ``(directions, radii)``: the signed kernel value and the same
    integral with every factor replaced by its absolute value. The
    second is the natural bilinear scale against which cancellation in
    the first is judged. ``directions`` are plane angles for d=2 and
    polar angles of the output direction for d=3.
    """
    rho_values = np.atleast_1d(np.asarray(rho_values, dtype=float))
    if field_.dim == 2:
        dirs = np.array([0.0, 1.1]) if directions is None else np.atleast_1d(
            np.asarray(directions, dtype=float)
        )
        return _angular_parts_2d(field_, rho_values, dirs, n_angle)
    dirs = np.array([0.5 * math.pi, 1.0]) if directions is None else np.atleast_1d(
        np.asarray(directions, dtype=float)
    )
    return _angular_parts_3d(field_, rho_values, dirs, n_angle)


def so2_cancellation_residual(
    field_: AzimuthalField,
    rho_samples: np.ndarray,
    n_angle: int = 128,
    directions: np.ndarray | None = None,
) -> float:
    """Measured angular-kernel residual on an equivariant field.

    For a field in the equivariant class the exact kernel vanishes by
    the reflection argument; the returned number is the quadrature-level
    residual of that cancellation, the worst ratio of signed to
    absolute kernel value over the sampled radii and directions.
    """
    num, den = angular_kernel_parts(
        field_, rho_samples, n_angle=n_angle, directions=directions
    )
    live = den > 0.0
    if not live.any():
        return 0.0
    return float(np.max(np.abs(num[live]) / den[live]))
