"""Radial grids and scalar radial profiles.

Profiles live on a composite grid (log-spaced core, linear outer block)
and carry analytic near-origin and far-tail models so they can be
evaluated and integrated on the whole half-line, not just between the
first and last node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .exceptions import ParameterError
from .specfun import upper_inc_gamma


def _simpson_weights(n: int, h: float) -> np.ndarray:
    # composite Simpson on n points (n odd, n-1 intervals even)
    if n < 3 or n % 2 == 0:
        raise ParameterError(f"Simpson block needs an odd point count, got {n}")
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


@dataclass(frozen=True)
class RadialGrid:
    """Composite quadrature grid on ``[0, r_max]``.

    Log-spaced nodes cover ``[r_min, r_break]`` and linear nodes cover
    ``[r_break, r_max]``; the two blocks share the breakpoint. Weights
    are composite Simpson in the transformed variable of each block, so
    smooth integrands are integrated to roughly 1e-8 relative accuracy.
    The stub ``[0, r_min]`` is folded into the first weight under a
    locally-constant assumption.
    """

    nodes: np.ndarray
    weights: np.ndarray
    r_min: float
    r_break: float
    r_max: float

    @classmethod
    def build(
        cls,
        r_min: float = 1e-4,
        r_break: float = 1.0,
        r_max: float = 20.0,
        n_log: int = 257,
        n_lin: int = 257,
    ) -> "RadialGrid":
        if not 0.0 < r_min < r_break < r_max:
            raise ParameterError("need 0 < r_min < r_break < r_max")
        u = np.linspace(math.log(r_min), math.log(r_break), n_log)
        r_log = np.exp(u)
        r_log[0], r_log[-1] = r_min, r_break
        # du-weights times dr/du = r
        w_log = _simpson_weights(n_log, u[1] - u[0]) * r_log
        r_lin = np.linspace(r_break, r_max, n_lin)
        w_lin = _simpson_weights(n_lin, r_lin[1] - r_lin[0])
        nodes = np.concatenate([r_log, r_lin[1:]])
        weights = np.concatenate([w_log, w_lin[1:]])
        weights[n_log - 1] += w_lin[0]
        weights[0] += r_min
        return cls(
            nodes=nodes,
            weights=weights,
            r_min=r_min,
            r_break=r_break,
            r_max=r_max,
        )

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray, deterministic: bool = False) -> float:
        """Quadrature of node values over ``[0, r_max]``."""
        prods = np.asarray(values, dtype=float) * self.weights
        if deterministic:
            return math.fsum(prods.tolist())
        return float(np.sum(prods))

    def tail_nodes(self, rate: float, npts: int = 48) -> tuple[np.ndarray, np.ndarray]:
        """Gauss-Legendre nodes and weights for ``[r_max, r_max + span]``.

        ``rate`` is the net exponential decay rate of the integrand past
        the grid; the span covers 40 e-foldings of it.
        """
        if rate <= 0.0:
            raise ParameterError(f"tail decay rate must be positive, got {rate}")
        span = min(40.0 / rate, 400.0)
        x, w = np.polynomial.legendre.leggauss(npts)
        mid = self.r_max + 0.5 * span
        half = 0.5 * span
        return mid + half * x, half * w


@dataclass
class ScalarRadialProfile:
    """Scalar function of the radius with analytic origin and tail models.

    Between the first and last grid node the profile is interpolated by
    a monotone cubic in log-radius; intervals whose endpoint values
    straddle zero fall back to linear interpolation there, so the
    interpolant never manufactures spurious sign structure. Below the
    first node the profile follows ``amp0 * r**origin_power``; beyond
    the last node it follows ``amp_tail * r**tail_power *
    exp(-tail_rate * r)``. Either model may be disabled (``None`` /
    zero amplitude).
    """

    grid: RadialGrid
    values: np.ndarray
    origin_power: float | None = None
    tail_power: float | None = None
    tail_rate: float = 0.0
    _interp: PchipInterpolator | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.nodes.shape:
            raise ParameterError("profile values must match the grid shape")

    @classmethod
    def from_callable(
        cls,
        f: Callable[[np.ndarray], np.ndarray],
        grid: RadialGrid,
        origin_power: float | None = None,
        tail_power: float | None = None,
        tail_rate: float = 0.0,
    ) -> "ScalarRadialProfile":
        return cls(
            grid=grid,
            values=np.asarray(f(grid.nodes), dtype=float),
            origin_power=origin_power,
            tail_power=tail_power,
            tail_rate=tail_rate,
        )

    # -- models -------------------------------------------------------

    @property
    def origin_amp(self) -> float:
        if self.origin_power is None:
            return 0.0
        return float(self.values[0]) / self.grid.r_min**self.origin_power

    @property
    def tail_amp(self) -> float:
        if self.tail_power is None:
            return 0.0
        v_last = float(self.values[-1])
        if v_last == 0.0:
            return 0.0
        r = self.grid.r_max
        den = r**self.tail_power * math.exp(-self.tail_rate * r)
        if den == 0.0:
            raise ParameterError(
                "tail model underflows at r_max; the decay rate is too large "
                "for a matched amplitude"
            )
        return v_last / den

    def _interpolator(self) -> PchipInterpolator:
        if self._interp is None:
            # flat data segments overflow the slope weights internally;
            # the resulting zero derivatives are exactly what we want
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                self._interp = PchipInterpolator(
                    np.log(self.grid.nodes), self.values, extrapolate=False
                )
        return self._interp

    def evaluate(self, r) -> np.ndarray:
        """Profile values at arbitrary radii ``r >= 0``."""
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        out = np.zeros_like(r)
        nodes = self.grid.nodes

        inner = r < self.grid.r_min
        if inner.any():
            if self.origin_power is None:
                out[inner] = self.values[0]
            else:
                out[inner] = self.origin_amp * r[inner] ** self.origin_power

        outer = r > self.grid.r_max
        if outer.any() and self.tail_power is not None:
            out[outer] = self.tail_amp * np.exp(
                self.tail_power * np.log(r[outer]) - self.tail_rate * r[outer]
            )

        mid = ~inner & ~outer
        if mid.any():
            rm = r[mid]
            vals = self._interpolator()(np.log(rm))
            # linear fallback on intervals where the node values change sign
            idx = np.clip(np.searchsorted(nodes, rm, side="right") - 1, 0, nodes.size - 2)
            lo, hi = self.values[idx], self.values[idx + 1]
            crossing = lo * hi < 0.0
            if crossing.any():
                t = (rm[crossing] - nodes[idx[crossing]]) / (
                    nodes[idx[crossing] + 1] - nodes[idx[crossing]]
                )
                vals[crossing] = lo[crossing] * (1.0 - t) + hi[crossing] * t
            out[mid] = vals
        return out[0] if scalar else out

    def __call__(self, r):
        return self.evaluate(r)

    # -- integration ---------------------------------------------------

    def tail_integral(self, extra_power: float = 0.0, extra_rate: float = 0.0) -> float:
        """Integral of ``profile(r) * r**extra_power * exp(extra_rate*r)``
        over ``(r_max, inf)`` using the analytic tail model.

        Raises if the combined exponent does not decay.
        """
        if self.tail_power is None or self.tail_amp == 0.0:
            return 0.0
        rate = self.tail_rate - extra_rate
        if rate <= 0.0:
            raise ParameterError("tail integral diverges: no net exponential decay")
        a = self.tail_power + extra_power + 1.0
        x = rate * self.grid.r_max
        return self.tail_amp * rate ** (-a) * upper_inc_gamma(a, x)

    def scaled(self, factor: float) -> "ScalarRadialProfile":
        return ScalarRadialProfile(
            grid=self.grid,
            values=self.values * factor,
            origin_power=self.origin_power,
            tail_power=self.tail_power,
            tail_rate=self.tail_rate,
        )
