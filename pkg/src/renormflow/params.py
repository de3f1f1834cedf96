"""Problem parameters, derived constants, and inequality-system feasibility.

The operator and the invariant-set machinery are controlled by a large
family of interdependent exponents.  This module holds the validated
parameter record, the derived quantities entering the a-priori bounds,
and checkers that evaluate each inequality system row by row with
explicit slacks, so that feasibility reports are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError

HALF_INT_TOL = 1e-12
EQUALITY_TOL = 1e-12


def leray_exponent(d: int, gamma: float) -> float:
    """Amplitude scaling exponent forced by the self-similar ansatz."""
    if d < 1:
        raise ParameterError(f"dimension must be >= 1, got {d}")
    if gamma <= 0.0:
        raise ParameterError(f"dissipation order must be positive, got {gamma}")
    return gamma - d - 1.0


@dataclass(frozen=True)
class BoundConstants:
    """Proportionality constants left free by the estimates.

    Every report echoes the values used, so a run is reproducible even
    when the defaults are overridden.
    """

    C: float = 1.0
    C_star: float = 1.0
    C_2: float = 1.0

    def as_dict(self) -> dict[str, float]:
        return {"C": self.C, "C_star": self.C_star, "C_2": self.C_2}


@dataclass(frozen=True)
class Params:
    """All scalar parameters of the problem and the weighted spaces."""

    d: int
    gamma: float
    beta: float = 0.5
    T: float = 1.0
    p: float = 2.0
    nu: float = 1.0
    kappa: float = 0.0
    r: float = 2.0
    sigma: float = -0.5
    theta: float = 0.5
    alpha: float = -2.0
    epsilon: float = 0.1
    b_env: float = 1.0
    k_env: float = 1.0
    mu: float = 0.1

    def __post_init__(self) -> None:
        if int(self.d) != self.d or self.d < 2:
            raise ParameterError(f"dimension must be an integer >= 2, got {self.d}")
        if self.gamma <= 1.0:
            raise ParameterError(f"dissipation order must exceed 1, got {self.gamma}")
        if not 0.0 < self.beta < 1.0:
            raise ParameterError(f"scale ratio must lie in (0,1), got {self.beta}")
        if self.T <= 0.0:
            raise ParameterError(f"blow-up time must be positive, got {self.T}")
        if self.p <= 1.0:
            raise ParameterError(f"Lebesgue exponent must exceed 1, got {self.p}")
        if self.r <= 1.0:
            raise ParameterError(f"dual exponent r must exceed 1, got {self.r}")
        if self.b_env <= 0.0 or self.k_env <= 0.0:
            raise ParameterError("envelope rate and amplitude must be positive")

    @property
    def c(self) -> float:
        return self.gamma - self.d - 1.0

    @property
    def s(self) -> float:
        return self.r / (self.r - 1.0)


@dataclass(frozen=True)
class DerivedConstants:
    """Quantities computed from a parameter set via the bound formulas."""

    params: Params
    constants: BoundConstants
    m: float
    s: float
    a_max: float
    a_hat: float
    k_min: float
    mu_min: float

    def l_of_k(self, k: float) -> float:
        p = self.params
        return p.d / self.s - (k + p.d - 1.0 - p.kappa)


def derived_constants(
    params: Params, constants: BoundConstants | None = None
) -> DerivedConstants:
    """Derived exponents and thresholds of the a-priori bounds.

    ``a_max`` is the largest ball radius left invariant by the operator,
    ``a_hat`` the radius on which it contracts, ``k_min`` the smallest
    admissible Hoelder constant and ``mu_min`` the smallest admissible
    lower bound for the linear functional that excludes the zero field.
    The latter two are ``inf`` when the corresponding denominator is not
    positive at these parameters.
    """
    constants = constants or BoundConstants()
    pr = params
    m = (
        pr.p * (pr.r - 1.0) / pr.r
        - (pr.p / pr.gamma) * (pr.kappa + 1.0 + pr.nu)
        - pr.d * (pr.r - pr.p) / (pr.r * pr.gamma)
    )
    x = pr.c + pr.nu + pr.d / pr.p
    stretch = 1.0 / pr.beta**pr.gamma - 1.0
    a_max = constants.C_star * stretch ** (-m / pr.p) * (1.0 - pr.beta**x)
    a_hat = 0.5 * a_max

    k_exp = min(
        1.0,
        1.0 / pr.s,
        1.0 / pr.p + pr.nu / pr.gamma,
        m / pr.p + 1.0 / pr.gamma,
        pr.theta,
    )
    denom = 1.0 - pr.beta ** (x - pr.theta) - constants.C_2 * a_hat * stretch ** (m / pr.p)
    if denom > 0.0:
        k_min = constants.C * a_hat * (1.0 - pr.beta) ** k_exp / denom
    else:
        k_min = math.inf

    growth = pr.beta ** (pr.c + pr.alpha + pr.d) - 1.0
    if growth > 0.0:
        mu_min = pr.k_env**2 * constants.C * (1.0 - pr.beta) / growth
    else:
        mu_min = math.inf

    return DerivedConstants(
        params=params,
        constants=constants,
        m=m,
        s=pr.s,
        a_max=a_max,
        a_hat=a_hat,
        k_min=k_min,
        mu_min=mu_min,
    )


# -- inequality reports ----------------------------------------------------


@dataclass(frozen=True)
class Inequality:
    label: str
    lhs: float
    rhs: float
    relation: str
    passed: bool
    slack: float
    note: str = ""

    def line(self) -> str:
        flag = "pass" if self.passed else "FAIL"
        out = (
            f"{self.label:<12} {self.lhs:+.9g} {self.relation} {self.rhs:+.9g}"
            f"  {flag}  slack={self.slack:+.3e}"
        )
        return out + (f"  [{self.note}]" if self.note else "")


@dataclass(frozen=True)
class HypothesisReport:
    system: str
    rows: tuple[Inequality, ...]
    constants: dict[str, float] = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    @property
    def overall(self) -> bool:
        return all(row.passed for row in self.rows)

    def subsystem(self, prefix: str) -> bool:
        """Pass flag of the rows whose label starts with ``prefix``."""
        rows = [r for r in self.rows if r.label.split(".")[0] == prefix]
        if not rows:
            raise ParameterError(f"no rows labelled {prefix} in system {self.system}")
        return all(r.passed for r in rows)

    def row(self, label: str) -> Inequality:
        for r in self.rows:
            if r.label == label:
                return r
        raise ParameterError(f"no row labelled {label} in system {self.system}")

    def to_text(self) -> str:
        head = [f"system {self.system}: {'PASS' if self.overall else 'FAIL'}"]
        if self.constants:
            pairs = ", ".join(f"{k}={v:g}" for k, v in self.constants.items())
            head.append(f"constants: {pairs}")
        body = [row.line() for row in self.rows]
        return "\n".join(head + body + [f"note: {n}" for n in self.notes])

    def to_mapping(self) -> dict[str, float | bool | str]:
        out: dict[str, float | bool | str] = {
            "system": self.system,
            "overall": self.overall,
        }
        for key, val in self.constants.items():
            out[f"const.{key}"] = val
        for row in self.rows:
            out[f"{row.label}.lhs"] = row.lhs
            out[f"{row.label}.rhs"] = row.rhs
            out[f"{row.label}.pass"] = row.passed
            out[f"{row.label}.slack"] = row.slack
        return out


def _lt(label: str, lhs: float, rhs: float, note: str = "") -> Inequality:
    slack = rhs - lhs
    return Inequality(label, lhs, rhs, "<", slack > 0.0, slack, note)


def _le(label: str, lhs: float, rhs: float, note: str = "") -> Inequality:
    slack = rhs - lhs
    return Inequality(label, lhs, rhs, "<=", slack >= 0.0, slack, note)


def _ge(label: str, lhs: float, rhs: float, note: str = "") -> Inequality:
    slack = lhs - rhs
    return Inequality(label, lhs, rhs, ">=", slack >= 0.0, slack, note)


def _gt(label: str, lhs: float, rhs: float, note: str = "") -> Inequality:
    slack = lhs - rhs
    return Inequality(label, lhs, rhs, ">", slack > 0.0, slack, note)


def _eq(label: str, lhs: float, rhs: float, note: str = "") -> Inequality:
    gap = abs(lhs - rhs)
    return Inequality(label, lhs, rhs, "==", gap <= EQUALITY_TOL, -gap, note)


def _half_int_distance(value: float) -> float:
    return abs(value - round(value * 2.0) / 2.0)


def _excl(label: str, distance: float, note: str = "") -> Inequality:
    return Inequality(
        label, distance, HALF_INT_TOL, "dist>", distance > HALF_INT_TOL, distance, note
    )


def check_trivial_hypotheses(
    params: Params, constants: BoundConstants | None = None
) -> HypothesisReport:
    """Inequality report for the bounded invariant-ball construction.

    Evaluates the primitive systems H1 through H7 and the collected
    restatement H8; the latter combines the same constraints with
    slightly tighter endpoints, so both appear in the report.
    """
    constants = constants or BoundConstants()
    pr = params
    d, g, p, nu, kap, r = pr.d, pr.gamma, pr.p, pr.nu, pr.kappa, pr.r
    c, s, th = pr.c, pr.s, pr.theta
    m = derived_constants(params, constants).m
    mid = d * (r - p) / r + p * (nu + kap + 1.0)

    rows = [
        _gt("H1.1", p, 1.0),
        _eq("H1.2", 1.0 / r, 2.0 / p + (2.0 * nu + kap) / d - 1.0),
        _lt("H1.3", kap, d / r),
        _lt("H1.4", (d - 1.0) / 2.0 * (1.0 - 2.0 / p), nu),
        _lt("H1.5", nu, d * (p - 1.0) / p),
        _gt("H1.6", r, 1.0),
        _ge("H1.7", 2.0 * r, p),
        _gt("H1.8", max(nu, kap), 0.0),
        _ge("H1.9", nu + kap, (d - 1.0) * (1.0 / r - 1.0 / p)),
        _lt("H2.1", max(0.0, d + p * (c + nu)), mid),
        _lt("H2.2", mid, g * p * (r - 1.0) / r),
        _gt("H3", g * p * (r - 1.0) / r - mid, g),
        _gt("H4", p, r / (r - 1.0)),
        _gt("H5.pos", s * (d / s - (c + d - 1.0 - kap)), 0.0, "s*l(c)"),
        _lt("H5.1", p, mid),
        _lt("H5.2", nu, 1.0),
        _gt("H6", c - th + nu + d / p, 0.0),
        _gt("H7.1", th, 0.0),
        _le("H7.2", th, min(1.0, g - 1.0, g * m / (p * (g - 1.0)), nu, 1.0 / p)),
        _eq("H8.1", 1.0 / r, 2.0 / p + (2.0 * nu + kap) / d - 1.0),
        _lt("H8.2", r / (r - 1.0), p),
        _le("H8.3", p, 2.0 * r),
        _gt("H8.4", th, 0.0),
        _le("H8.5", th, min(g - 1.0, g * m / (p * (g - 1.0)), nu, 1.0 / p)),
        _lt("H8.6", (d - 1.0) / 2.0 * (1.0 - 2.0 / p), nu),
        _lt("H8.7", nu, 1.0),
        _lt("H8.8", d * (p - 1.0) / p + 1.0 + th - g, nu),
        _lt("H8.9", nu, d * (p - 1.0) / p),
        _gt("H8.10", max(nu, kap), 0.0),
        _lt("H8.11", kap, d / r),
        _ge("H8.12", nu + kap, (d - 1.0) * (1.0 / r - 1.0 / p)),
        _lt("H8.13", max(d + p * (c + nu), p), mid),
        _lt("H8.14", mid, g * p * (r - 1.0) / r - g),
    ]
    return HypothesisReport(
        system="H1-H8", rows=tuple(rows), constants=constants.as_dict()
    )


ALL_NONTRIVIAL = ("H9", "H10", "H11", "H12", "H13")
REDUCED_NONTRIVIAL = ("H9", "H10", "H13")


def witness_systems(d: int, gamma: float) -> tuple[str, ...]:
    """Inequality systems a witness at (d, gamma) can jointly satisfy.

    The equicontinuity chain H11-H12 requires gamma < d + 2 + theta -
    kappa, which with theta <= 1 and kappa > 0 caps gamma strictly below
    d + 3.  The reduced system H13 drops that bound and is feasible on
    all of (d, 2d+2), so beyond the cap only the reduced target remains.
    """
    return ALL_NONTRIVIAL if gamma < d + 3.0 else REDUCED_NONTRIVIAL


def check_nontrivial_hypotheses(
    params: Params, systems: tuple[str, ...] | None = None
) -> HypothesisReport:
    """Inequality report for the envelope-set construction.

    Covers the envelope invariance system H9, the weight-exponent region
    H10, the equicontinuity system H11, the collected system H12 and its
    reduced form H13, including the half-integer exclusions.  ``systems``
    restricts the report (and hence the overall flag) to a subset.
    """
    pr = params
    d, g, p, nu, kap = pr.d, pr.gamma, pr.p, pr.nu, pr.kappa
    c, sg, th, al, ep = pr.c, pr.sigma, pr.theta, pr.alpha, pr.epsilon

    s1_cap = min(1.0 - g, ep - d + min(3.0, d))
    # membership in a union of intervals: positive slack = distance inside
    s2_slack = max(
        min(al - (-2.0 * d - 1.0), ep - d / 2.0 - al),
        min(al - (ep + (1.0 - d) / 2.0), 1.0 + 2.0 * ep - al),
    )
    in_left = -2.0 * d - 1.0 < al < ep - d / 2.0
    in_right = ep + (1.0 - d) / 2.0 <= al < 1.0 + 2.0 * ep

    rows = [
        _gt("H9.1", sg, max(-float(d), -3.0)),
        _lt("H9.2", sg, 0.0),
        _excl("H9.3", min(abs(sg + 2.0), abs(sg + d / 2.0)), "sigma vs {-2,-d/2}"),
        _ge("H9.4", g - d - 1.0, sg),
        _lt("H10.1", al, s1_cap),
        _excl("H10.2", _half_int_distance(al + d - ep), "alpha vs Z/2-d+eps"),
        Inequality(
            "H10.3", al, s2_slack, "in", in_left or in_right, s2_slack,
            "union of two intervals",
        ),
        _ge("H11.1", c, sg),
        _ge("H11.2", sg, -float(d)),
        _gt("H11.3", sg, -(p - 1.0) / p),
        _lt("H11.4", sg, 0.0),
        _excl("H11.5", _half_int_distance(sg), "sigma vs Z/2"),
        _gt("H11.6", g, d - 2.0),
        _gt("H11.7", p, 2.0),
        _gt("H11.8", c + nu + d / p, th),
        _gt("H11.9", (2.0 * sg + d + nu - 1.0) * p, -float(d)),
        _lt("H11.10", d * (p - 2.0) / (2.0 * p), nu),
        _lt("H11.11", nu, d * (p - 2.0) / p),
        _lt("H11.12", kap, float(d)),
        _gt("H11.13", (sg + nu) * p, -float(d)),
        _gt("H11.14", th - c - kap + 1.0, 0.0),
        _lt("H11.15", -float(d), (nu - kap) * p),
        _gt("H11.16", g, d + sg),
        _gt("H12.1", p, 2.0),
        _gt("H12.2a", sg, -(p - 1.0) / p),
        _lt("H12.2b", sg, 0.0),
        _excl("H12.2c", _half_int_distance(sg), "sigma vs Z/2"),
        _gt("H12.3", (sg + nu) * p, -float(d)),
        _lt("H12.4a", d * (p - 2.0) / (2.0 * p), nu),
        _lt("H12.4b", nu, d * (p - 2.0) / p),
        _gt("H12.5a", nu + d / p, th - c),
        _gt("H12.5b", th - c, kap - 1.0),
        _lt("H12.6", -float(d), (nu - kap) * p),
        _gt("H12.7", (2.0 * sg + d + nu - 1.0) * p, -float(d)),
        Inequality(
            "H12.8",
            max(1.0 - g - (-2.0 * d - 1.0), 1.0 - g - (ep + (1.0 - d) / 2.0)),
            0.0,
            ">",
            (-2.0 * d - 1.0 < 1.0 - g) or (ep + (1.0 - d) / 2.0 < 1.0 - g),
            max(1.0 - g - (-2.0 * d - 1.0), 1.0 - g - (ep + (1.0 - d) / 2.0)),
            "disjunction, best branch shown",
        ),
        _ge("H12.9a", c, sg),
        _ge("H12.9b", sg, -float(d)),
        _gt("H12.10", g, d + sg),
        _lt("H12.11", kap, float(d)),
        _lt("H13.1a", max((d - kap) / 2.0 + th + 1.0, sg + d + 1.0), g),
        _lt("H13.1b", g, 2.0 * d + 2.0),
        _gt("H13.2a", sg, -(p - 1.0) / p),
        _lt("H13.2b", sg, 0.0),
        _excl("H13.2c", _half_int_distance(sg), "sigma vs Z/2"),
        _gt("H13.3", p, 2.0),
        _gt("H13.4a", kap, 0.0),
        _lt("H13.4b", kap, d * (p - 2.0) / p),
        _gt("H13.5a", th, 0.0),
        _le("H13.5b", th, 1.0),
    ]

    selected = ALL_NONTRIVIAL if systems is None else tuple(systems)
    rows = [r for r in rows if r.label.split(".")[0] in selected]

    # the reduced chain replaces nu + d/p by (kappa+d)/2; the two agree
    # exactly when kappa = 2 nu - d (p-2)/p, so both are reported
    rewrite_lhs = (kap + d) / 2.0
    coupling = kap - (2.0 * nu - d * (p - 2.0) / p)
    notes = (
        f"rewrite of H12.5a: (kappa+d)/2 = {rewrite_lhs:.9g} vs theta-c = "
        f"{th - c:.9g} ({'pass' if rewrite_lhs > th - c else 'FAIL'}); forms "
        f"coincide iff kappa - (2 nu - d (p-2)/p) = 0, here {coupling:.9g}",
    )
    return HypothesisReport(
        system="+".join(selected), rows=tuple(rows), notes=notes
    )


def witness_search(
    d: int, gamma: float, budget: int = 100_000, seed: int = 0
) -> Params | None:
    """Search for a parameter tuple satisfying the envelope-set systems.

    Tries a handful of deterministic candidates first, then samples the
    remaining budget at random: p uniform in (2, 8], kappa log-uniform
    inside its window, nu centred in its window through the coupling
    relation, sigma uniform avoiding the excluded points.  Returns None
    when gamma lies outside (d, 2d+2) or the budget runs out.
    """
    if not d < gamma < 2.0 * d + 2.0:
        return None
    rng = np.random.default_rng(seed)
    evaluated = 0
    target = witness_systems(d, gamma)
    full = target == ALL_NONTRIVIAL

    def attempt(p, kap, sg, th, ep, al, r) -> Params | None:
        nu = (kap + d * (p - 2.0) / p) / 2.0
        try:
            cand = Params(
                d=d, gamma=gamma, p=p, nu=nu, kappa=kap, r=r,
                sigma=sg, theta=th, alpha=al, epsilon=ep,
            )
        except ParameterError:
            return None
        if check_nontrivial_hypotheses(cand, target).overall:
            return cand
        return None

    c = gamma - d - 1.0

    def nudged(x: float) -> float:
        # keep sampled exponents clear of the half-integer exclusions
        if _half_int_distance(x) <= 1e-9:
            return x - 1e-3
        return x

    deterministic = []
    for p in (3.0, 4.0):
        for frac in (0.4, 0.7):
            kap = frac * d * (p - 2.0) / p
            nu = (kap + d * (p - 2.0) / p) / 2.0
            sg = nudged(max(-(p - 1.0) / p * 0.98, min(-0.3, c - 0.05)))
            th_hi = min(1.0, gamma - 1.0 - (d - kap) / 2.0) - 1e-3
            th_lo = 1e-3
            if full:
                th_hi = min(th_hi, c + nu + d / p - 1e-3)
                th_lo = max(th_lo, c + kap - 1.0 + 1e-3)
            if th_hi <= th_lo:
                continue
            th = 0.5 * (th_lo + th_hi)
            for ep in (0.1, 0.6):
                hi = min(1.0 - gamma, ep - d + min(3.0, d), ep - d / 2.0)
                if hi <= -2.0 * d - 1.0:
                    continue
                al = nudged(0.5 * (hi + (-2.0 * d - 1.0)))
                deterministic.append((p, kap, sg, th, ep, al, 5.0))

    for cand_args in deterministic:
        if evaluated >= budget:
            return None
        evaluated += 1
        found = attempt(*cand_args)
        if found is not None:
            return found

    while evaluated < budget:
        evaluated += 1
        p = 2.0 + 6.0 * rng.random()
        cap = d * (p - 2.0) / p
        kap = math.exp(
            math.log(1e-3 * cap) + rng.random() * math.log(0.999 / 1e-3)
        )
        lo = -(p - 1.0) / p
        hi = min(0.0, c)
        if hi <= lo:
            continue
        sg = nudged(lo + (hi - lo) * rng.random())
        nu = (kap + cap) / 2.0
        th_hi = min(1.0, gamma - 1.0 - (d - kap) / 2.0)
        th_lo = 0.0
        if full:
            th_hi = min(th_hi, c + nu + d / p)
            th_lo = max(th_lo, c + kap - 1.0)
        if th_hi <= th_lo:
            continue
        th = th_lo + (th_hi - th_lo) * rng.random()
        ep = 0.01 + 0.99 * rng.random()
        a_hi = min(1.0 - gamma, ep - d + min(3.0, d), ep - d / 2.0)
        a_lo = -2.0 * d - 1.0
        if a_hi <= a_lo:
            continue
        al = nudged(a_lo + (a_hi - a_lo) * rng.random())
        r = 1.1 + 6.9 * rng.random()
        found = attempt(p, kap, sg, th, ep, al, r)
        if found is not None:
            return found
    return None
