"""Damped fixed-point search for the rescale-and-interact map.

The map is known to have invariant compact convex sets, which gives
existence of fixed points but no algorithm. The iteration here is
plain damped Picard with residual-based step control, plus an optional
Anderson mixing accelerator; traces record enough per-step state to
judge a run afterwards, and nothing in this module claims that a
nontrivial fixed point has been certified.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError
from .fields import (
    AzimuthalField,
    EnvelopeSpec,
    I_functional,
    WeightSpec,
    envelope_check,
    weighted_norm,
)
from .grids import RadialGrid, ScalarRadialProfile
from .params import Params
from .renorm import RenormConfig, apply_renorm, equitightness_margin

DIVERGENCE_GUARD = 1.0e6
MIN_DAMPING = 1.0e-3


def _residual_weight(params: Params) -> WeightSpec:
    return WeightSpec.fourier(params.nu, params.b_env)


def _class_envelope(params: Params) -> EnvelopeSpec:
    return EnvelopeSpec(k=params.k_env, sigma=params.sigma, decay=params.b_env)


def _mass_or_nan(psi: AzimuthalField, params: Params) -> float:
    try:
        return I_functional(psi, params.alpha, params.gamma)
    except ParameterError:
        return math.nan


def residual(psi: AzimuthalField, cfg: RenormConfig) -> float:
    """Displacement norm of one application, in the exp-power weight."""
    image = apply_renorm(psi, cfg)
    return weighted_norm(
        image.subtract(psi), _residual_weight(cfg.params), cfg.params.p
    )


@dataclass(frozen=True)
class IterationStep:
    """One row of a fixed-point trace."""

    iteration: int
    residual: float
    norm: float
    mass: float
    inside_envelope: bool
    damping: float


@dataclass(frozen=True)
class IterationTrace:
    """Per-iteration records plus the reason the loop stopped.

    ``reason`` is one of ``converged``, ``stalled``, ``budget`` or
    ``diverged``. Divergence is reported this way rather than raised:
    a blown-up run is a legitimate result of an exploratory start.
    """

    steps: tuple[IterationStep, ...]
    reason: str

    @property
    def final_residual(self) -> float:
        return self.steps[-1].residual

    @property
    def residuals(self) -> tuple[float, ...]:
        return tuple(s.residual for s in self.steps)

    def tsv(self) -> str:
        lines = ["iteration\tresidual\tnorm\tmass\tinside_envelope\tdamping"]
        for s in self.steps:
            lines.append(
                f"{s.iteration}\t{s.residual:.17g}\t{s.norm:.17g}\t"
                f"{s.mass:.17g}\t{int(s.inside_envelope)}\t{s.damping:.17g}"
            )
        return "\n".join(lines) + "\n"


def _flatten(field_: AzimuthalField, keys: list) -> np.ndarray:
    zero = np.zeros(field_.grid.size)
    if field_.dim == 2:
        parts = [
            field_.harmonics[k].values if k in field_.harmonics else zero
            for k in keys
        ]
    else:
        parts = [p.values for p in field_.polar_profiles]
    return np.concatenate(parts)


def _rebuild(template: AzimuthalField, keys: list, vec: np.ndarray) -> AzimuthalField:
    n = template.grid.size
    if template.dim == 2:
        harmonics = {}
        for i, k in enumerate(keys):
            ref = template.harmonics.get(k)
            harmonics[k] = ScalarRadialProfile(
                grid=template.grid,
                values=vec[i * n : (i + 1) * n].copy(),
                origin_power=None if ref is None else ref.origin_power,
                tail_power=None if ref is None else ref.tail_power,
                tail_rate=0.0 if ref is None else ref.tail_rate,
            )
        return AzimuthalField(dim=2, grid=template.grid, harmonics=harmonics)
    profiles = [
        ScalarRadialProfile(
            grid=template.grid,
            values=vec[i * n : (i + 1) * n].copy(),
            origin_power=p.origin_power,
            tail_power=p.tail_power,
            tail_rate=p.tail_rate,
        )
        for i, p in enumerate(template.polar_profiles)
    ]
    return AzimuthalField.from_polar(template.grid, template.polar_nodes, profiles)


class _AndersonMixer:
    """Window-3 Anderson mixing on flattened iterates.

    Combines the last few damped-map outputs with least-squares
    weights that minimise the combined update residual. History is
    dropped whenever step control rejects a step, since the rejected
    direction poisons the window.
    """

    def __init__(self, window: int = 3) -> None:
        self.window = window
        self.xs: list[np.ndarray] = []
        self.gs: list[np.ndarray] = []

    def reset(self) -> None:
        self.xs.clear()
        self.gs.clear()

    def push(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        self.xs.append(x)
        self.gs.append(g)
        if len(self.xs) > self.window + 1:
            self.xs.pop(0)
            self.gs.pop(0)
        f = [g_i - x_i for x_i, g_i in zip(self.xs, self.gs)]
        if len(f) < 2:
            return self.gs[-1]
        fk = f[-1]
        cols = np.stack([fi - fk for fi in f[:-1]], axis=1)
        theta, *_ = np.linalg.lstsq(cols, -fk, rcond=None)
        out = self.gs[-1].copy()
        for t, g_i in zip(theta, self.gs[:-1]):
            out += t * (g_i - self.gs[-1])
        return out


def picard_iterate(
    psi0: AzimuthalField,
    cfg: RenormConfig,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 20,
    anderson: bool = False,
    restore_mass: float | None = None,
) -> tuple[AzimuthalField, IterationTrace]:
    """Iterate ``psi <- (1 - lam) psi + lam R[psi]`` with step control.

    The damping factor halves whenever a step increases the residual
    and recovers gradually afterwards; below ``MIN_DAMPING`` the run
    stops as stalled. ``restore_mass`` rescales each accepted iterate
    so its scale functional equals the given target. That rescaling is
    a search heuristic, not a symmetry of the map: it only counteracts
    the drift toward the trivial fixed point, and traces produced with
    it say nothing about unforced convergence.
    """
    if not 0.0 < damping <= 1.0:
        raise ParameterError("damping must lie in (0, 1]")
    pr = cfg.params
    w = _residual_weight(pr)
    env = _class_envelope(pr)
    mixer = _AndersonMixer() if anderson else None

    def snapshot(k: int, psi: AzimuthalField, resid: float, lam: float) -> IterationStep:
        return IterationStep(
            iteration=k,
            residual=resid,
            norm=weighted_norm(psi, w, pr.p),
            mass=_mass_or_nan(psi, pr),
            inside_envelope=envelope_check(psi, env).ok,
            damping=lam,
        )

    psi = psi0
    image = apply_renorm(psi, cfg)
    resid = weighted_norm(image.subtract(psi), w, pr.p)
    steps = [snapshot(0, psi, resid, 0.0)]
    reason = "budget"
    lam = damping
    k = 1
    while True:
        if resid <= tol:
            reason = "converged"
            break
        if not math.isfinite(resid) or steps[-1].norm > DIVERGENCE_GUARD:
            reason = "diverged"
            break
        if k > max_iter:
            reason = "budget"
            break

        candidate = psi.scale(1.0 - lam).axpy(lam, image)
        if mixer is not None and psi.dim == 2:
            keys = sorted(set(psi.harmonics) | set(image.harmonics))
            mixed = mixer.push(_flatten(psi, keys), _flatten(candidate, keys))
            candidate = _rebuild(candidate, keys, mixed)
        elif mixer is not None:
            mixed = mixer.push(_flatten(psi, []), _flatten(candidate, []))
            candidate = _rebuild(candidate, [], mixed)
        if restore_mass is not None:
            mass = I_functional(candidate, pr.alpha, pr.gamma)
            if mass <= 0.0:
                reason = "stalled"
                break
            candidate = candidate.scale(restore_mass / mass)

        cand_image = apply_renorm(candidate, cfg)
        cand_resid = weighted_norm(cand_image.subtract(candidate), w, pr.p)
        if cand_resid > resid and math.isfinite(resid):
            if mixer is not None:
                mixer.reset()
            if lam <= MIN_DAMPING:
                reason = "stalled"
                break
            lam = max(0.5 * lam, MIN_DAMPING)
            continue

        psi, image, resid = candidate, cand_image, cand_resid
        steps.append(snapshot(k, psi, resid, lam))
        lam = min(damping, 2.0 * lam)
        k += 1
    return psi, IterationTrace(steps=tuple(steps), reason=reason)


def power_consistency(
    psi_star: AzimuthalField, cfg: RenormConfig, n: int
) -> float:
    """Displacement norm under the map at scale ``beta**n``.

    A fixed point of the map is fixed by every power of it, with the
    error of an approximate fixed point accumulating linearly in
    ``n``; ``power_consistency(psi, cfg, 1)`` equals
    ``residual(psi, cfg)`` by construction.
    """
    if n < 1:
        raise ParameterError("power index must be a positive integer")
    beta_n = cfg.params.beta**n
    grid = cfg.grid
    span = 0.0
    profiles = (
        psi_star.harmonics.values() if psi_star.dim == 2 else psi_star.polar_profiles
    )
    for p in profiles:
        if p.tail_power is not None and float(np.max(np.abs(p.values))) > 0.0:
            span = max(span, min(40.0 / max(p.tail_rate, 1e-300), 400.0))
    validity = grid.r_max + span
    if grid.r_max / beta_n > 10.0 * validity:
        raise ParameterError(
            "scale beta**n pulls data from radii beyond tail validity; "
            "extend the grid or reduce n"
        )
    cfg_n = dataclasses.replace(
        cfg, params=dataclasses.replace(cfg.params, beta=beta_n)
    )
    image = apply_renorm(psi_star, cfg_n)
    return weighted_norm(
        image.subtract(psi_star), _residual_weight(cfg.params), cfg.params.p
    )


def sample_envelope_member(
    grid: RadialGrid, params: Params, rng: np.random.Generator
) -> AzimuthalField:
    """Random field strictly inside the power-exponential envelope class.

    Planar fields mix the lowest two active harmonics with random
    Dirichlet weights and signs under a total margin below one;
    three-dimensional fields modulate the radial envelope shape with a
    positive random polar factor bounded by the same margin.
    """
    margin = 0.8 + 0.15 * rng.random()
    r = grid.nodes
    base = params.k_env * np.exp(params.sigma * np.log(r) - params.b_env * r)
    if params.d == 2:
        keys = [(0, "cos"), (2, "cos"), (2, "sin")]
        wts = rng.dirichlet(np.ones(len(keys))) * margin
        signs = rng.choice([-1.0, 1.0], size=len(keys))
        harmonics = {
            k: ScalarRadialProfile(
                grid=grid,
                values=s * w * base,
                origin_power=params.sigma,
                tail_power=params.sigma,
                tail_rate=params.b_env,
            )
            for k, w, s in zip(keys, wts, signs)
        }
        return AzimuthalField(dim=2, grid=grid, harmonics=harmonics)
    from .fields import polar_quadrature

    theta, _ = polar_quadrature()
    coeffs = margin * (0.55 + 0.4 * rng.random(theta.size))
    profiles = [
        ScalarRadialProfile(
            grid=grid,
            values=c * base,
            origin_power=params.sigma,
            tail_power=params.sigma,
            tail_rate=params.b_env,
        )
        for c in coeffs
    ]
    return AzimuthalField.from_polar(grid, theta, profiles)


def sample_mass_member(
    grid: RadialGrid, params: Params, rng: np.random.Generator
) -> AzimuthalField:
    """Random member of the mass-constrained class.

    Starts from the deterministic minimal-mass member, whose radial
    average carries the whole scale functional, and spends the
    remaining envelope margin on random higher harmonics; those
    integrate to zero over angle, so the mass constraint is untouched.
    """
    from .fields import member_M_mu

    env = _class_envelope(params)
    core = member_M_mu(env, params.alpha, params.mu, params.gamma, grid, dim=params.d)
    if params.d != 2:
        return core
    prof = core.harmonics[(0, "cos")]
    head = envelope_check(core, env).max_ratio
    budget = 0.9 * max(0.0, 1.0 - head)
    wts = rng.dirichlet(np.ones(2)) * budget * rng.random()
    signs = rng.choice([-1.0, 1.0], size=2)
    harmonics = dict(core.harmonics)
    for key, w, s in zip([(2, "cos"), (2, "sin")], wts, signs):
        harmonics[key] = ScalarRadialProfile(
            grid=grid,
            values=s * (w / max(head, 1e-300)) * prof.values,
            origin_power=prof.origin_power,
            tail_power=prof.tail_power,
            tail_rate=prof.tail_rate,
        )
    return AzimuthalField(dim=2, grid=grid, harmonics=harmonics)


def contraction_estimate(
    cfg: RenormConfig,
    amplitude: float,
    samples: int,
    seed: int = 0,
) -> float:
    """Worst pairwise Lipschitz ratio of the map at a given amplitude.

    Samples envelope-class pairs, normalises both to the amplitude in
    the power-exponential weighted norm and returns the largest ratio
    ``|R[psi1] - R[psi2]| / |psi1 - psi2|``. Degenerate pairs are
    skipped. As the amplitude shrinks the estimate approaches the
    rescaling coefficient of the norm bound.
    """
    if amplitude <= 0.0:
        raise ParameterError("amplitude must be positive")
    pr = cfg.params
    w = WeightSpec.physical(pr.nu)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        pair = []
        for _ in range(2):
            m = sample_envelope_member(cfg.grid, pr, rng)
            m = m.scale(amplitude / weighted_norm(m, w, pr.p))
            pair.append(m)
        gap = weighted_norm(pair[0].subtract(pair[1]), w, pr.p)
        if gap == 0.0:
            continue
        image_gap = weighted_norm(
            apply_renorm(pair[0], cfg).subtract(apply_renorm(pair[1], cfg)),
            w,
            pr.p,
        )
        worst = max(worst, image_gap / gap)
    return worst


@dataclass(frozen=True)
class InvarianceReport:
    """Membership audit of mapped random samples from an invariant set."""

    set_label: str
    margins: tuple[float, ...]
    failures: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.failures

    def line(self) -> str:
        flag = "pass" if self.ok else "FAIL"
        worst = min(self.margins) if self.margins else math.inf
        return (
            f"invariance {flag}: set {self.set_label}, "
            f"{len(self.margins)} samples, {len(self.failures)} failures, "
            f"worst margin {worst:.4g}"
        )


def invariance_sample_test(
    cfg: RenormConfig,
    set_spec: str,
    samples: int,
    seed: int = 0,
) -> InvarianceReport:
    """Sample a set, apply the map once, re-check membership.

    ``set_spec`` selects the class: ``envelope`` for the
    power-exponential envelope, ``mass`` for its intersection with the
    scale-functional lower bound, ``tail`` for the uniform tail-measure
    bound. Margins are recorded per sample; a margin at or below zero
    is a failure.
    """
    if set_spec not in ("envelope", "mass", "tail"):
        raise ParameterError(f"unknown set spec: {set_spec!r}")
    pr = cfg.params
    env = _class_envelope(pr)
    rng = np.random.default_rng(seed)
    margins = []
    failures = []
    for i in range(samples):
        if set_spec == "mass":
            m = sample_mass_member(cfg.grid, pr, rng)
        else:
            m = sample_envelope_member(cfg.grid, pr, rng)
        if set_spec == "tail":
            rep = equitightness_margin(m, cfg)
            margin = (rep.bound - max(rep.image_measures)) / rep.bound
        else:
            image = apply_renorm(m, cfg)
            rep = envelope_check(image, env)
            margin = 1.0 - rep.max_ratio
            if set_spec == "mass":
                margin = min(
                    margin,
                    (I_functional(image, pr.alpha, pr.gamma) - pr.mu) / pr.mu,
                )
        margins.append(float(margin))
        if margin <= 0.0:
            failures.append(i)
    return InvarianceReport(
        set_label=set_spec, margins=tuple(margins), failures=tuple(failures)
    )
