"""Fourier-side field model: weights, envelopes, azimuthal vector fields.

An azimuthal field points along the azimuthal unit vector everywhere and
is odd under reflection through the origin. In two dimensions its scalar
component is stored as even cosine/sine angular harmonics (oddness of
the vector forces even harmonics of the component); in three dimensions
the component is axially symmetric and is stored per polar node. All
norms are weighted Lebesgue norms with an optional exponential factor in
the weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError
from .grids import RadialGrid, ScalarRadialProfile
from .specfun import unit_sphere_area

N_PHI = 128
N_THETA = 32

HarmonicKey = tuple[int, str]


# ---------------------------------------------------------------------------
# weights and envelopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightSpec:
    """Radial weight ``r**power * exp(rate * r)``.

    Three stock families cover everything the package needs: the
    physical-side weight ``exp(r) r**nu``, the Fourier-side weight
    ``r**nu exp(b/2 r)`` and the plain power ``r**alpha``.
    """

    power: float
    rate: float
    label: str = "custom"

    @classmethod
    def physical(cls, nu: float) -> "WeightSpec":
        return cls(power=nu, rate=1.0, label=f"physical(nu={nu})")

    @classmethod
    def fourier(cls, nu: float, b: float = 1.0) -> "WeightSpec":
        return cls(power=nu, rate=0.5 * b, label=f"fourier(nu={nu},b={b})")

    @classmethod
    def plain_power(cls, alpha: float) -> "WeightSpec":
        return cls(power=alpha, rate=0.0, label=f"power(alpha={alpha})")

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            logs = self.power * np.log(r) + self.rate * r
        return np.exp(logs)


@dataclass(frozen=True)
class EnvelopeSpec:
    """Majorant ``k * r**sigma * exp(-decay * r)`` for field components."""

    k: float
    sigma: float
    decay: float

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            logs = self.sigma * np.log(r) - self.decay * r
        return self.k * np.exp(logs)

    def profile(self, grid: RadialGrid) -> ScalarRadialProfile:
        return ScalarRadialProfile(
            grid=grid,
            values=self(grid.nodes),
            origin_power=self.sigma,
            tail_power=self.sigma,
            tail_rate=self.decay,
        )


# ---------------------------------------------------------------------------
# azimuthal fields
# ---------------------------------------------------------------------------


def _merged_origin(a: ScalarRadialProfile, b: ScalarRadialProfile) -> float | None:
    if a.origin_power is None:
        return b.origin_power
    if b.origin_power is None:
        return a.origin_power
    return min(a.origin_power, b.origin_power)


def _merged_tail(
    a: ScalarRadialProfile, b: ScalarRadialProfile
) -> tuple[float | None, float]:
    # the slower-decaying model dominates past the grid
    if a.tail_power is None:
        return b.tail_power, b.tail_rate
    if b.tail_power is None:
        return a.tail_power, a.tail_rate
    if a.tail_rate != b.tail_rate:
        return (a, b)[a.tail_rate > b.tail_rate].tail_power, min(
            a.tail_rate, b.tail_rate
        )
    return max(a.tail_power, b.tail_power), a.tail_rate


def _profile_axpy(
    a: ScalarRadialProfile, b: ScalarRadialProfile, coeff: float
) -> ScalarRadialProfile:
    tail_power, tail_rate = _merged_tail(a, b)
    return ScalarRadialProfile(
        grid=a.grid,
        values=a.values + coeff * b.values,
        origin_power=_merged_origin(a, b),
        tail_power=tail_power,
        tail_rate=tail_rate,
    )


def polar_quadrature(n: int = N_THETA) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights for the polar angle on ``[0, pi]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * math.pi * (x + 1.0), 0.5 * math.pi * w


@dataclass
class AzimuthalField:
    """Odd vector field directed along the azimuthal unit vector.

    Attributes
    ----------
    dim : int
        Ambient dimension, 2 or 3.
    grid : RadialGrid
        Shared radial grid of every stored profile.
    harmonics : dict
        Two-dimensional storage: ``(n, "cos"/"sin") -> profile`` with
        even ``n``; the pair ``(0, "sin")`` is not allowed.
    polar_nodes, polar_profiles :
        Three-dimensional storage: one radial profile of the component
        per polar-angle node (axially symmetric component).
    """

    dim: int
    grid: RadialGrid
    harmonics: dict[HarmonicKey, ScalarRadialProfile] = field(default_factory=dict)
    polar_nodes: np.ndarray | None = None
    polar_profiles: list[ScalarRadialProfile] | None = None

    def __post_init__(self):
        if self.dim == 2:
            for (n, par) in self.harmonics:
                if n % 2 or n < 0 or par not in ("cos", "sin") or (n, par) == (0, "sin"):
                    raise ParameterError(f"bad harmonic key {(n, par)}")
        elif self.dim == 3:
            if self.polar_nodes is None or self.polar_profiles is None:
                raise ParameterError("three-dimensional field needs polar data")
        else:
            raise ParameterError(f"dimension must be 2 or 3, got {self.dim}")

    # -- constructors ---------------------------------------------------

    @classmethod
    def radial(cls, profile: ScalarRadialProfile, dim: int = 2) -> "AzimuthalField":
        """Field whose component depends on the radius only."""
        if dim == 2:
            return cls(dim=2, grid=profile.grid, harmonics={(0, "cos"): profile})
        nodes, _ = polar_quadrature()
        return cls(
            dim=3,
            grid=profile.grid,
            polar_nodes=nodes,
            polar_profiles=[profile] * nodes.size,
        )

    @classmethod
    def from_harmonics(
        cls, grid: RadialGrid, harmonics: dict[HarmonicKey, ScalarRadialProfile]
    ) -> "AzimuthalField":
        return cls(dim=2, grid=grid, harmonics=dict(harmonics))

    @classmethod
    def from_polar(
        cls,
        grid: RadialGrid,
        polar_nodes: np.ndarray,
        profiles: list[ScalarRadialProfile],
    ) -> "AzimuthalField":
        if len(profiles) != polar_nodes.size:
            raise ParameterError("one profile per polar node required")
        return cls(
            dim=3, grid=grid, polar_nodes=polar_nodes, polar_profiles=list(profiles)
        )

    # -- structure ------------------------------------------------------

    @property
    def max_harmonic(self) -> int:
        if self.dim != 2 or not self.harmonics:
            return 0
        return max(n for n, _ in self.harmonics)

    def amplitude(self) -> float:
        """Largest absolute node value over all stored profiles."""
        profs = (
            list(self.harmonics.values()) if self.dim == 2 else self.polar_profiles
        )
        return max((float(np.max(np.abs(p.values))) for p in profs), default=0.0)

    def is_equivariant(self, tol: float = 1e-12) -> bool:
        """True if the component has no angular dependence beyond the class."""
        if self.dim == 3:
            return True
        scale = max(self.amplitude(), 1e-300)
        return all(
            float(np.max(np.abs(p.values))) <= tol * scale
            for (n, _), p in self.harmonics.items()
            if n > 0
        )

    def mean_profile(self) -> ScalarRadialProfile:
        """Angle-averaged component as a radial profile."""
        if self.dim == 2:
            prof = self.harmonics.get((0, "cos"))
            if prof is not None:
                return prof
            any_prof = next(iter(self.harmonics.values()))
            return ScalarRadialProfile(
                grid=self.grid,
                values=np.zeros(self.grid.size),
                origin_power=any_prof.origin_power,
                tail_power=any_prof.tail_power,
                tail_rate=any_prof.tail_rate,
            )
        nodes, wts = self.polar_nodes, polar_quadrature(self.polar_nodes.size)[1]
        sin_w = np.sin(nodes) * wts
        sin_w = sin_w / np.sum(sin_w)
        vals = sum(
            w * p.values for w, p in zip(sin_w, self.polar_profiles)
        )
        first = self.polar_profiles[0]
        return ScalarRadialProfile(
            grid=self.grid,
            values=vals,
            origin_power=first.origin_power,
            tail_power=first.tail_power,
            tail_rate=first.tail_rate,
        )

    # -- evaluation -------------------------------------------------------

    def component_at(self, r, angle) -> np.ndarray:
        """Scalar component at radius ``r`` and angle.

        The angle is the plane angle in two dimensions and the polar
        angle in three (axial symmetry).
        """
        r = np.asarray(r, dtype=float)
        angle = np.broadcast_to(np.asarray(angle, dtype=float), r.shape)
        if self.dim == 2:
            out = np.zeros(r.shape)
            for (n, par), prof in self.harmonics.items():
                radial = prof.evaluate(r)
                trig = np.cos(n * angle) if par == "cos" else np.sin(n * angle)
                out = out + radial * trig
            return out
        # linear interpolation across polar nodes, constant past the ends
        nodes = self.polar_nodes
        vals = np.stack([p.evaluate(r) for p in self.polar_profiles])
        idx = np.clip(np.searchsorted(nodes, angle) - 1, 0, nodes.size - 2)
        t = np.clip((angle - nodes[idx]) / (nodes[idx + 1] - nodes[idx]), 0.0, 1.0)
        flat = idx.ravel()
        cols = np.arange(flat.size)
        vals_flat = vals.reshape(nodes.size, -1)
        lo = vals_flat[flat, cols]
        hi = vals_flat[flat + 1, cols]
        return (lo * (1.0 - t.ravel()) + hi * t.ravel()).reshape(r.shape)

    def vector_at(self, points: np.ndarray) -> np.ndarray:
        """Full vector values at Cartesian points, shape ``(m, dim)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise ParameterError("point dimension mismatch")
        r = np.linalg.norm(pts, axis=1)
        safe = np.where(r > 0.0, r, 1.0)
        if self.dim == 2:
            phi = np.arctan2(pts[:, 1], pts[:, 0])
            g = self.component_at(r, phi)
            e_phi = np.stack([-pts[:, 1] / safe, pts[:, 0] / safe], axis=1)
        else:
            rho = np.hypot(pts[:, 0], pts[:, 1])
            theta = np.arctan2(rho, pts[:, 2])
            g = self.component_at(r, theta)
            safe_rho = np.where(rho > 0.0, rho, 1.0)
            e_phi = np.stack(
                [-pts[:, 1] / safe_rho, pts[:, 0] / safe_rho, np.zeros(len(pts))],
                axis=1,
            )
            g = np.where(rho > 0.0, g, 0.0)
        g = np.where(r > 0.0, g, 0.0)
        return g[:, None] * e_phi

    # -- algebra ----------------------------------------------------------

    def _check_compatible(self, other: "AzimuthalField"):
        if self.dim != other.dim:
            raise ParameterError("field dimensions differ")
        if self.grid is not other.grid and not np.array_equal(
            self.grid.nodes, other.grid.nodes
        ):
            raise ParameterError("fields live on different grids")

    def axpy(self, coeff: float, other: "AzimuthalField") -> "AzimuthalField":
        """Return ``self + coeff * other``."""
        self._check_compatible(other)
        if self.dim == 2:
            merged: dict[HarmonicKey, ScalarRadialProfile] = {}
            for key in set(self.harmonics) | set(other.harmonics):
                a = self.harmonics.get(key)
                b = other.harmonics.get(key)
                if a is None:
                    merged[key] = b.scaled(coeff)
                elif b is None:
                    merged[key] = a
                else:
                    merged[key] = _profile_axpy(a, b, coeff)
            return AzimuthalField(dim=2, grid=self.grid, harmonics=merged)
        if not np.array_equal(self.polar_nodes, other.polar_nodes):
            raise ParameterError("polar nodes differ")
        profs = [
            _profile_axpy(a, b, coeff)
            for a, b in zip(self.polar_profiles, other.polar_profiles)
        ]
        return AzimuthalField(
            dim=3, grid=self.grid, polar_nodes=self.polar_nodes, polar_profiles=profs
        )

    def subtract(self, other: "AzimuthalField") -> "AzimuthalField":
        return self.axpy(-1.0, other)

    def scale(self, coeff: float) -> "AzimuthalField":
        if self.dim == 2:
            return AzimuthalField(
                dim=2,
                grid=self.grid,
                harmonics={k: p.scaled(coeff) for k, p in self.harmonics.items()},
            )
        return AzimuthalField(
            dim=3,
            grid=self.grid,
            polar_nodes=self.polar_nodes,
            polar_profiles=[p.scaled(coeff) for p in self.polar_profiles],
        )


# ---------------------------------------------------------------------------
# integration helpers
# ---------------------------------------------------------------------------


def _angular_abs_power(field_: AzimuthalField, r: np.ndarray, p: float) -> np.ndarray:
    """Integral of |component|^p over the unit sphere, per radius."""
    if field_.dim == 2:
        phi = np.linspace(0.0, 2.0 * math.pi, N_PHI, endpoint=False)
        rr = np.repeat(r[:, None], N_PHI, axis=1)
        aa = np.broadcast_to(phi, rr.shape)
        g = field_.component_at(rr, aa)
        return np.mean(np.abs(g) ** p, axis=1) * 2.0 * math.pi
    nodes, wts = polar_quadrature(field_.polar_nodes.size)
    vals = np.stack([prof.evaluate(r) for prof in field_.polar_profiles])
    return 2.0 * math.pi * np.einsum(
        "j,jr->r", wts * np.sin(nodes), np.abs(vals) ** p
    )


def _dominant_models(field_: AzimuthalField) -> tuple[float | None, float | None, float]:
    profs = (
        list(field_.harmonics.values()) if field_.dim == 2 else field_.polar_profiles
    )
    origin = None
    tail_power, tail_rate = None, 0.0
    for prof in profs:
        if prof.origin_power is not None:
            origin = prof.origin_power if origin is None else min(origin, prof.origin_power)
        if prof.tail_power is not None:
            if tail_power is None or prof.tail_rate < tail_rate or (
                prof.tail_rate == tail_rate and prof.tail_power > tail_power
            ):
                tail_power, tail_rate = prof.tail_power, prof.tail_rate
    return origin, tail_power, tail_rate


def weighted_norm(
    obj: AzimuthalField | ScalarRadialProfile,
    weight: WeightSpec,
    p: float,
    dim: int | None = None,
) -> float:
    """Weighted Lebesgue norm ``( integral |f|^p weight^p )^(1/p)``.

    Works for a full azimuthal field or for a scalar radial function
    (``dim`` must then be supplied). The integral runs over all of
    space: the grid carries ``[0, r_max]`` with the near-origin stub
    refined through the origin power model, and the analytic tail
    models extend past ``r_max``. Returns ``inf`` when the tail does
    not decay against the weight.
    """
    if p <= 0:
        raise ParameterError(f"p must be positive, got {p}")
    if isinstance(obj, ScalarRadialProfile):
        fld = AzimuthalField.radial(obj, dim=2 if dim is None else dim)
        if dim is None:
            raise ParameterError("dim is required for a bare radial profile")
    else:
        fld = obj
        if dim is not None and dim != fld.dim:
            raise ParameterError("dim disagrees with the field")
    d = fld.dim
    grid = fld.grid

    r = grid.nodes
    ang = _angular_abs_power(fld, r, p)
    core = ang * weight(r) ** p * r ** (d - 1)
    total = float(np.dot(grid.weights, core)) - grid.r_min * core[0]

    origin_power, tail_power, tail_rate = _dominant_models(fld)
    op = 0.0 if origin_power is None else origin_power
    q = p * op + p * weight.power + d
    if q <= 0.0:
        return math.inf
    total += ang[0] * weight(grid.r_min) ** p * grid.r_min**d / q

    net_rate = p * tail_rate - p * weight.rate
    if tail_power is not None:
        if net_rate <= 0.0 and _tail_visible(fld):
            return math.inf
        if net_rate > 0.0:
            tr, tw = grid.tail_nodes(net_rate)
            ang_t = _angular_abs_power(fld, tr, p)
            total += float(np.dot(tw, ang_t * weight(tr) ** p * tr ** (d - 1)))
    if total < 0.0:
        total = 0.0
    return total ** (1.0 / p)


def _tail_visible(field_: AzimuthalField, rel: float = 1e-14) -> bool:
    profs = (
        list(field_.harmonics.values()) if field_.dim == 2 else field_.polar_profiles
    )
    scale = max((float(np.max(np.abs(p.values))) for p in profs), default=0.0)
    return any(abs(float(p.values[-1])) > rel * scale for p in profs)


def tail_norm(
    obj: AzimuthalField | ScalarRadialProfile,
    weight: WeightSpec,
    p: float,
    rho: float,
    dim: int | None = None,
) -> float:
    """Weighted norm restricted to the region ``|x| > rho``."""
    if isinstance(obj, ScalarRadialProfile):
        if dim is None:
            raise ParameterError("dim is required for a bare radial profile")
        fld = AzimuthalField.radial(obj, dim=dim)
    else:
        fld = obj
    d = fld.dim
    grid = fld.grid
    if rho <= 0.0:
        return weighted_norm(fld, weight, p)

    total = 0.0
    if rho < grid.r_max:
        keep = grid.nodes > rho
        r = np.concatenate([[rho], grid.nodes[keep]])
        # trapezoid on the clipped partition
        dr = np.diff(r)
        w = np.zeros_like(r)
        w[:-1] += 0.5 * dr
        w[1:] += 0.5 * dr
        ang = _angular_abs_power(fld, r, p)
        total += float(np.dot(w, ang * weight(r) ** p * r ** (d - 1)))

    _, tail_power, tail_rate = _dominant_models(fld)
    if tail_power is not None and _tail_visible(fld):
        net_rate = p * tail_rate - p * weight.rate
        if net_rate <= 0.0:
            return math.inf
        start = max(rho, grid.r_max)
        span = min(40.0 / net_rate, 400.0)
        x, wq = np.polynomial.legendre.leggauss(48)
        tr = start + 0.5 * span * (x + 1.0)
        tw = 0.5 * span * wq
        ang_t = _angular_abs_power(fld, tr, p)
        total += float(np.dot(tw, ang_t * weight(tr) ** p * tr ** (d - 1)))
    return total ** (1.0 / p)


def I_functional(field_: AzimuthalField, alpha: float, gamma: float) -> float:
    """Linear functional ``integral exp(-|x|^gamma) component |x|^alpha dx``.

    Only the angle-average of the component survives the angular
    integration, so the functional reads the mean profile. The
    near-origin stub uses the origin power model in closed form; the
    contribution past the grid is evaluated on tail quadrature nodes.
    """
    prof = field_.mean_profile()
    d = field_.dim
    grid = field_.grid
    area = unit_sphere_area(d)

    r = grid.nodes
    core = prof.values * np.exp(-(r**gamma)) * r ** (alpha + d - 1)
    total = float(np.dot(grid.weights, core)) - grid.r_min * core[0]

    op = 0.0 if prof.origin_power is None else prof.origin_power
    q = op + alpha + d
    if q <= 0.0:
        raise ParameterError("functional diverges at the origin for this field")
    total += float(prof.values[0]) * grid.r_min ** (alpha + d) / q

    if prof.tail_power is not None and abs(float(prof.values[-1])) > 0.0:
        rate = prof.tail_rate + 1.0
        tr, tw = grid.tail_nodes(rate)
        vals = prof.evaluate(tr) * np.exp(-(tr**gamma)) * tr ** (alpha + d - 1)
        total += float(np.dot(tw, vals))
    return area * total


# ---------------------------------------------------------------------------
# envelopes, members, moduli
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnvelopeReport:
    ok: bool
    max_ratio: float
    worst_radius: float
    origin_limit_ratio: float


def envelope_check(
    field_: AzimuthalField, envelope: EnvelopeSpec, n_angles: int = 64
) -> EnvelopeReport:
    """Check strict pointwise domination ``|component| < envelope``.

    Scans the radial grid, tail quadrature nodes and the analytic
    origin limit. ``max_ratio < 1`` means the field is inside the
    envelope with margin ``1 - max_ratio``.
    """
    grid = field_.grid
    r_t = None
    _, tail_power, tail_rate = _dominant_models(field_)
    if tail_power is not None and tail_rate > envelope.decay:
        # field dies faster than the envelope: grid scan suffices
        r_all = grid.nodes
    elif tail_power is not None:
        r_t, _ = grid.tail_nodes(max(envelope.decay - tail_rate, 1e-3) + 1e-3)
        r_all = np.concatenate([grid.nodes, r_t])
    else:
        r_all = grid.nodes

    if field_.dim == 2:
        angles = np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False)
    else:
        angles = polar_quadrature(field_.polar_nodes.size)[0]
    rr = np.repeat(r_all[:, None], angles.size, axis=1)
    aa = np.broadcast_to(angles, rr.shape)
    g = np.abs(field_.component_at(rr, aa))
    env_vals = envelope(r_all)
    # far out both sides may underflow to zero; 0/0 counts as inside
    ratios = g / np.where(env_vals > 0.0, env_vals, 1.0)[:, None]
    dead = env_vals <= 0.0
    if dead.any():
        ratios[dead, :] = np.where(g[dead, :] > 0.0, math.inf, 0.0)
    worst = int(np.argmax(np.max(ratios, axis=1)))
    max_ratio = float(np.max(ratios))

    origin_power, _, _ = _dominant_models(field_)
    if origin_power is None:
        origin_ratio = math.inf if envelope.sigma > 0 else 0.0
    elif origin_power > envelope.sigma:
        origin_ratio = 0.0
    elif origin_power == envelope.sigma:
        amp = max(
            abs(p.origin_amp)
            for p in (
                field_.harmonics.values()
                if field_.dim == 2
                else field_.polar_profiles
            )
            if p.origin_power is not None
        )
        origin_ratio = amp / envelope.k
    else:
        origin_ratio = math.inf
    return EnvelopeReport(
        ok=max_ratio < 1.0 and origin_ratio < 1.0,
        max_ratio=max(max_ratio, origin_ratio),
        worst_radius=float(r_all[worst]),
        origin_limit_ratio=origin_ratio,
    )


def member_M_mu(
    envelope: EnvelopeSpec,
    alpha: float,
    mu: float,
    gamma: float,
    grid: RadialGrid,
    dim: int = 2,
    eps: float = 0.1,
) -> AzimuthalField:
    """Construct an envelope-class field with functional value >= ``mu``.

    The radial shape is ``min(r**sigma, r**(eps - dim - alpha)) *
    exp(-decay r)`` scaled by the envelope amplitude; the steeper
    near-origin branch keeps the ``|x|^alpha`` integral finite while the
    far branch hugs the envelope. The overall factor is chosen to meet
    the functional target; infeasible targets raise with the attainable
    bound in the message.
    """
    sig2 = eps - dim - alpha
    if sig2 <= envelope.sigma:
        raise ParameterError(
            "alpha too large: steep origin branch would not beat the envelope"
        )

    def shape(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            lo = envelope.sigma * np.log(r)
            hi = sig2 * np.log(r)
        return envelope.k * np.exp(np.minimum(lo, hi) - envelope.decay * r)

    prof = ScalarRadialProfile.from_callable(
        shape,
        grid,
        origin_power=sig2,
        tail_power=envelope.sigma,
        tail_rate=envelope.decay,
    )
    base = AzimuthalField.radial(prof, dim=dim)
    attainable = I_functional(base, alpha, gamma)
    if attainable <= 0.0:
        raise ParameterError("shape functional is not positive; check parameters")
    a = mu / attainable
    if a >= 1.0 - 1e-9:
        raise ParameterError(
            f"target mu={mu} infeasible: attainable bound is {attainable:.6g}"
        )
    a = min(1.0 - 1e-9, 1.02 * a) if a > 0 else 0.5
    return base.scale(a)


@dataclass(frozen=True)
class HolderReport:
    K: float
    theta: float
    table: tuple[tuple[float, float, float], ...]  # (|delta|, norm, ratio)


def holder_modulus(
    field_: AzimuthalField,
    theta: float,
    weight: WeightSpec,
    p: float,
    delta0: float = 0.1,
    n_dirs: int = 8,
    n_mags: int = 3,
) -> HolderReport:
    """Sampled Hoelder-in-translation modulus of the field.

    Computes ``norm(field - shifted field) / |delta|**theta`` over
    ``n_dirs`` directions and ``n_mags`` magnitudes ``delta0 / 4**j``
    and reports the worst ratio as the constant estimate.
    """
    d = field_.dim
    grid = field_.grid
    if d == 2:
        dirs = [
            np.array([math.cos(a), math.sin(a)])
            for a in np.linspace(0.0, 2.0 * math.pi, n_dirs, endpoint=False)
        ]
        angles = np.linspace(0.0, 2.0 * math.pi, 96, endpoint=False)
        ang_w = np.full(angles.size, 2.0 * math.pi / angles.size)
        cosA, sinA = np.cos(angles), np.sin(angles)
        pts = np.stack(
            [
                np.outer(grid.nodes, cosA).ravel(),
                np.outer(grid.nodes, sinA).ravel(),
            ],
            axis=1,
        )
    else:
        base = [
            (0, 0, 1), (0, 0, -1), (1, 0, 0), (0, 1, 0),
            (1, 1, 1), (-1, 1, 1), (1, -1, 1), (1, 1, -1),
        ]
        dirs = [np.asarray(v, dtype=float) / np.linalg.norm(v) for v in base[:n_dirs]]
        th, thw = polar_quadrature(24)
        ph = np.linspace(0.0, 2.0 * math.pi, 24, endpoint=False)
        phw = 2.0 * math.pi / ph.size
        sin_t, cos_t = np.sin(th), np.cos(th)
        u = np.stack(
            [
                np.outer(sin_t, np.cos(ph)).ravel(),
                np.outer(sin_t, np.sin(ph)).ravel(),
                np.repeat(cos_t, ph.size),
            ],
            axis=1,
        )
        ang_w = np.repeat(thw * sin_t, ph.size) * phw
        pts = (grid.nodes[:, None, None] * u[None, :, :]).reshape(-1, d)

    # shared quadrature weights over the point cloud: w_r * r^{d-1} * ang_w
    qw = ((grid.weights * grid.nodes ** (d - 1))[:, None] * ang_w[None, :]).ravel()
    wvals = weight(np.linalg.norm(pts, axis=1)) ** p

    base_vals = field_.vector_at(pts)
    rows = []
    worst = 0.0
    for direction in dirs:
        for j in range(n_mags):
            mag = delta0 / 4.0**j
            shifted = field_.vector_at(pts - mag * direction)
            diff = np.linalg.norm(base_vals - shifted, axis=1)
            nrm = float(np.dot(qw, diff**p * wvals)) ** (1.0 / p)
            ratio = nrm / mag**theta
            rows.append((mag, nrm, ratio))
            worst = max(worst, ratio)
    return HolderReport(K=worst, theta=theta, table=tuple(rows))
