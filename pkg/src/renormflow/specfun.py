"""Special functions used by the renormalization numerics.

Hand-rolled implementations of the upper incomplete gamma function, the
Gauss hypergeometric function, and sphere-average reduction, together
with the odd-power difference identity that ties the first two together.
Kept dependency-free on purpose: the test suite cross-checks every
routine against an independent route (adaptive quadrature or mpmath).
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .exceptions import ConvergenceError, ParameterError

_EPS = 2.2204460492503131e-16
_FPMIN = 1.0e-300
_MAX_ITER = 600
_INTEGER_TOL = 1e-12


def unit_sphere_area(dim: int) -> float:
    """Surface area of the unit sphere in ``dim``-dimensional space.

    ``unit_sphere_area(2) == 2*pi`` (circle), ``unit_sphere_area(3) ==
    4*pi``. For ``dim == 1`` the "sphere" is the two-point set
    {-1, +1} and the area is 2.
    """
    if dim < 1:
        raise ParameterError(f"dimension must be >= 1, got {dim}")
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def _lower_gamma_series(a: float, x: float) -> float:
    # Continuation series: gamma_low(a, x) = x^a e^-x sum_n x^n / (a ... (a+n)).
    # Valid for any non-integer a by analytic continuation; needs x < a + 1
    # for fast convergence, which the caller guarantees.
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x))
    raise ConvergenceError(f"incomplete gamma series stalled at a={a}, x={x}")


def _upper_gamma_cf(a: float, x: float) -> float:
    # Continued fraction (modified Lentz), convergent for x > 0 and any
    # real a; efficient once x >= a + 1.
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            arg = -x + a * math.log(x)
            if arg < -700.0:
                return 0.0
            return math.exp(arg) * h
    raise ConvergenceError(f"incomplete gamma fraction stalled at a={a}, x={x}")


def upper_inc_gamma(a: float, x: float) -> float:
    """Upper incomplete gamma function for real order ``a``.

    Parameters
    ----------
    a : float
        Order; may be negative. If ``a <= 0`` the point ``x = 0`` is a
        divergence and is rejected.
    x : float
        Lower integration limit, ``x >= 0``.

    Returns
    -------
    float
        The integral of ``t**(a-1) * exp(-t)`` over ``(x, inf)``.

    Notes
    -----
    Series for small ``x``, continued fraction otherwise, following the
    classical split at ``x = a + 1``. Negative non-integer orders use
    the analytic continuation of the series; negative orders close to
    an integer are rejected in the small-``x`` branch where the
    continuation has a pole.
    """
    if x < 0.0:
        raise ParameterError(f"x must be >= 0, got {x}")
    if x == 0.0:
        if a <= 0.0:
            raise ParameterError("upper_inc_gamma diverges at x=0 for a <= 0")
        return math.gamma(a)
    if x >= max(a, 0.0) + 1.0:
        return _upper_gamma_cf(a, x)
    if a > 0.0:
        return math.gamma(a) - _lower_gamma_series(a, x)
    if abs(a - round(a)) < _INTEGER_TOL:
        raise ParameterError(
            f"order a={a} is a non-positive integer; small-x branch undefined"
        )
    return math.gamma(a) - _lower_gamma_series(a, x)


def upper_inc_gamma_diff(a: float, x1: float, x2: float) -> float:
    """Difference ``upper_inc_gamma(a, x1) - upper_inc_gamma(a, x2)``.

    Equals the integral of ``t**(a-1) exp(-t)`` over ``(x1, x2)`` and is
    therefore positive for ``x1 < x2``. When the endpoints agree to
    better than one part in a thousand the subtraction would cancel, so
    the definition integral is evaluated directly by Gauss-Legendre
    quadrature instead.
    """
    if not 0.0 < x1 <= x2:
        raise ParameterError(f"need 0 < x1 <= x2, got x1={x1}, x2={x2}")
    if x2 == x1:
        return 0.0
    if (x2 - x1) < 1e-3 * x1:
        nodes, weights = np.polynomial.legendre.leggauss(32)
        mid = 0.5 * (x1 + x2)
        half = 0.5 * (x2 - x1)
        t = mid + half * nodes
        vals = np.exp((a - 1.0) * np.log(t) - t)
        return float(half * np.dot(weights, vals))
    return upper_inc_gamma(a, x1) - upper_inc_gamma(a, x2)


def _hyp2f1_series(a: float, b: float, c: float, z: float) -> float:
    # Power series, reliable for |z| <= 0.75.
    term = 1.0
    total = 1.0
    for n in range(_MAX_ITER):
        cn = c + n
        if abs(cn) < _INTEGER_TOL:
            raise ParameterError(f"2F1 pole: c={c} hits a non-positive integer")
        term *= (a + n) * (b + n) / (cn * (n + 1.0)) * z
        total += term
        if abs(term) < abs(total) * _EPS:
            return total
    raise ConvergenceError(f"2F1 series stalled at z={z}")


def _hyp2f1_near_one(a: float, b: float, c: float, z: float) -> float:
    # Linear transformation to argument 1 - z.  Assumes c - a - b is not
    # an integer; the caller nudges parameters when it is.
    s = c - a - b
    w = 1.0 - z
    g1 = math.gamma(c) * math.gamma(s) / (math.gamma(c - a) * math.gamma(c - b))
    g2 = math.gamma(c) * math.gamma(-s) / (math.gamma(a) * math.gamma(b))
    f1 = _hyp2f1_series(a, b, a + b - c + 1.0, w)
    f2 = _hyp2f1_series(c - a, c - b, s + 1.0, w)
    return g1 * f1 + g2 * w**s * f2


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z < 1.

    Direct series for ``|z| <= 0.75``; the Euler transform maps negative
    arguments into (0, 1); arguments near 1 go through the 1 - z linear
    transformation. A non-positive integer ``a`` or ``b`` terminates
    the series, which is then valid everywhere and used directly.
    When ``c - a - b`` sits within 1e-5 of an integer
    the transformation is evaluated at two small symmetric shifts of
    ``c`` and averaged, which keeps roughly nine significant digits
    through the degenerate case.
    """
    if z >= 1.0:
        raise ParameterError(f"argument must satisfy z < 1, got {z}")
    if z == 0.0:
        return 1.0
    for p in (a, b):
        # terminating polynomial case; the transforms below would hit
        # gamma poles at 1/Gamma(a) or 1/Gamma(b)
        if round(p) <= 0.0 and abs(p - round(p)) < 1e-13:
            return _hyp2f1_series(a, b, c, z)
    if z < 0.0:
        # Pfaff: 2F1(a,b;c;z) = (1-z)^-a 2F1(a, c-b; c; z/(z-1)).
        return (1.0 - z) ** (-a) * gauss_2f1(a, c - b, c, z / (z - 1.0))
    if z <= 0.75:
        return _hyp2f1_series(a, b, c, z)
    s = c - a - b
    if abs(s - round(s)) < 1e-5:
        shift = 1e-6
        cp = c + (round(s) + shift - s)
        cm = c + (round(s) - shift - s)
        return 0.5 * (_hyp2f1_near_one(a, b, cp, z) + _hyp2f1_near_one(a, b, cm, z))
    return _hyp2f1_near_one(a, b, c, z)


def odd_power_diff_identity(n: float, z: float) -> tuple[float, float]:
    """Both sides of the odd-power difference identity.

    For real exponent ``n`` and ``|z| < 1``::

        (1-z)**(n+1) - (1+z)**(n+1)
            == -2*(n+1)*z * 2F1((1-n)/2, -n/2; 3/2; z**2)

    Returns ``(lhs, rhs)`` so that callers and tests can compare the
    two routes explicitly.
    """
    if not abs(z) < 1.0:
        raise ParameterError(f"identity requires |z| < 1, got {z}")
    lhs = (1.0 - z) ** (n + 1.0) - (1.0 + z) ** (n + 1.0)
    rhs = -2.0 * (n + 1.0) * z * gauss_2f1(0.5 * (1.0 - n), -0.5 * n, 1.5, z * z)
    return lhs, rhs


def sphere_reduce(f: Callable[[float], float], d: int, npts: int = 64) -> float:
    """Integrate a zonal function over the unit sphere in ``d`` dimensions.

    Reduces the surface integral of ``f(cos angle)`` over the sphere in
    ``R^d`` to a weighted one-dimensional integral::

        area(S^{d-2}) * integral_{-1}^{1} f(t) (1 - t^2)^{(d-3)/2} dt

    evaluated by ``npts``-point Gauss-Legendre quadrature after the
    substitution ``t = cos(w)``. The substitution is what makes ``d = 2``
    possible at all (the raw weight is endpoint-singular there) and it
    removes the endpoint derivative singularities for every other
    even dimension, leaving the smooth integrand
    ``f(cos w) * sin(w)**(d-2)`` in all cases.

    Parameters
    ----------
    f : callable
        Function of the cosine of the polar angle; must accept a numpy
        array.
    d : int
        Ambient dimension, ``d >= 2``.
    npts : int, optional
        Number of quadrature nodes.
    """
    if d < 2:
        raise ParameterError(f"dimension must be >= 2, got {d}")
    nodes, weights = np.polynomial.legendre.leggauss(npts)
    ring = unit_sphere_area(d - 1)
    w = 0.5 * math.pi * (nodes + 1.0)
    vals = np.asarray(f(np.cos(w)), dtype=float) * np.sin(w) ** (d - 2)
    return float(ring * 0.5 * math.pi * np.dot(weights, vals))
