import math
import time

import numpy as np

from renormflow.fields import (
    AzimuthalField,
    EnvelopeSpec,
    I_functional,
    WeightSpec,
    envelope_check,
    member_M_mu,
    weighted_norm,
)
from renormflow.grids import RadialGrid, ScalarRadialProfile
from renormflow.params import Params, derived_constants
from renormflow.renorm import (
    RenormConfig,
    apply_renorm,
    equitightness_margin,
    fixed_family_linear_residual,
    linear_rate,
    linear_term,
    nonlinear_term,
    norm_bound_report,
    quadratic_factor,
    so2_cancellation_residual,
    triv_fixed_family,
)

t0 = time.time()


def lap(msg):
    global t0
    print(f"--- {msg}  [{time.time() - t0:.1f}s]")
    t0 = time.time()


# 1. t-rule exactness
for beta, gamma in [(0.5, 2.0), (0.5, 3.0), (0.9, 2.6), (0.99, 2.0)]:
    cfg = RenormConfig.standard(Params(d=2, gamma=gamma, beta=beta))
    t, w = cfg.t_quadrature()
    assert t.min() > 1.0 and t.max() < 1.0 / beta
    worst = 0.0
    for k in range(10):
        exact = (beta ** -(k + 1) - 1.0) / (k + 1)
        got = float(w @ t**k)
        worst = max(worst, abs(got - exact) / abs(exact))
    print(f"beta={beta} gamma={gamma}: degree<=9 worst rel {worst:.3e}")
lap("t-rule")

# 2. frozen linear value: d=2 gamma=3 beta=0.5, psi==1, grid with node at 0.5
par3 = Params(d=2, gamma=3.0, beta=0.5)
grid_h = RadialGrid.build(r_break=0.5)
cfg_h = RenormConfig(params=par3, grid=grid_h)
ones = ScalarRadialProfile(grid=grid_h, values=np.ones(grid_h.size))
psi1 = AzimuthalField.radial(ones, dim=2)
L1 = linear_term(psi1, cfg_h)
idx = int(np.argmin(np.abs(grid_h.nodes - 0.5)))
print("node:", grid_h.nodes[idx], "L:", repr(L1.harmonics[(0, 'cos')].values[idx]),
      "exp(-0.875):", repr(math.exp(-0.875)))
lap("frozen linear")

# 3. member machinery, d=2 witness
P2 = Params(d=2, gamma=2.0, beta=0.9, p=2.0, nu=1.0, r=5.0, kappa=-1.4,
            sigma=-1.5, alpha=-2.0, b_env=2.0, k_env=0.05)
der = derived_constants(P2)
print("c", P2.c, "m", der.m, "l(c)", der.l_of_k(P2.c), "mu_min", der.mu_min,
      "rate", linear_rate(P2), "factor", quadratic_factor(P2))

grid = RadialGrid.build()
cfg = RenormConfig(params=P2, grid=grid)
env = EnvelopeSpec(k=P2.k_env, sigma=P2.sigma, decay=P2.b_env)


def member(rng, steep=False):
    keys = [(0, "cos"), (2, "cos"), (2, "sin")]
    wts = rng.dirichlet(np.ones(3)) * (0.8 + 0.15 * rng.random())
    signs = rng.choice([-1.0, 1.0], size=3)
    r = grid.nodes
    if steep:
        sig2 = P2.epsilon - P2.d - P2.alpha
        base = P2.k_env * np.exp(
            np.minimum(P2.sigma * np.log(r), sig2 * np.log(r)) - P2.b_env * r
        )
        op = sig2
    else:
        base = P2.k_env * np.exp(P2.sigma * np.log(r) - P2.b_env * r)
        op = P2.sigma
    harmonics = {
        k: ScalarRadialProfile(grid=grid, values=s * wg * base, origin_power=op,
                               tail_power=P2.sigma, tail_rate=P2.b_env)
        for k, wg, s in zip(keys, wts, signs)
    }
    return AzimuthalField(dim=2, grid=grid, harmonics=harmonics)


rng = np.random.default_rng(7)
psi = member(rng)
rep_in = envelope_check(psi, env)
print("member in:", rep_in.ok, rep_in.max_ratio)
image = apply_renorm(psi, cfg)
rep_out = envelope_check(image, env)
print("image in:", rep_out.ok, "max_ratio", rep_out.max_ratio,
      "worst_r", rep_out.worst_radius, "origin_ratio", rep_out.origin_limit_ratio)
lap("one member envelope")

for seed in range(3):
    rngx = np.random.default_rng(100 + seed)
    m = member(rngx)
    for beta in (0.7, 0.9, 0.99):
        cfgb = RenormConfig(params=Params(d=2, gamma=2.0, beta=beta, p=2.0, nu=1.0,
                                          r=5.0, kappa=-1.4, sigma=-1.5,
                                          b_env=2.0, k_env=0.05), grid=grid)
        rep = envelope_check(apply_renorm(m, cfgb), env)
        print(f"seed {seed} beta {beta}: ok {rep.ok} ratio {rep.max_ratio:.4f}")
lap("member sweep")

# 4. linearity / bilinearity exactness with power-of-two scaling
phi = member(np.random.default_rng(11))
L_psi = linear_term(psi, cfg)
L_2psi = linear_term(psi.scale(2.0), cfg)
worst = max(
    float(np.max(np.abs(L_2psi.harmonics[k].values - 2.0 * L_psi.harmonics[k].values)))
    for k in L_psi.harmonics
)
print("L scale-2 exactness:", worst)
N_psi = nonlinear_term(psi, cfg)
N_2psi = nonlinear_term(psi.scale(2.0), cfg)
worst = max(
    float(np.max(np.abs(N_2psi.harmonics[k].values - 4.0 * N_psi.harmonics[k].values)))
    for k in N_psi.harmonics
)
scaleN = max(float(np.max(np.abs(N_psi.harmonics[k].values))) for k in N_psi.harmonics)
print("N scale-2 exactness:", worst, "scale", scaleN)
# additivity of L (non-dyadic coefficient)
mix = psi.axpy(1.7, phi)
L_mix = linear_term(mix, cfg)
L_sum = L_psi.axpy(1.7, linear_term(phi, cfg))
worst = max(
    float(np.max(np.abs(L_mix.harmonics[k].values - L_sum.harmonics[k].values)))
    / max(1e-300, float(np.max(np.abs(L_sum.harmonics[k].values))))
    for k in L_sum.harmonics
)
print("L additivity rel:", worst)
lap("linearity")

# 5. beta -> 1 linear limit
P999 = Params(d=2, gamma=2.0, beta=0.999, p=2.0, nu=1.0, r=5.0, kappa=-1.4,
              sigma=-1.5, b_env=2.0, k_env=0.05)
cfg999 = RenormConfig(params=P999, grid=grid)
wv = WeightSpec.fourier(P999.nu, 1.0)
dev = weighted_norm(linear_term(psi, cfg999).subtract(psi), wv, P999.p)
ref = weighted_norm(psi, wv, P999.p)
print("beta=0.999 linear rel deviation:", dev / ref)
lap("beta->1 L")

# 6. nonlinear collapse beta -> 1
Pc = Params(d=2, gamma=2.0, beta=1.0 - 1e-6, p=2.0, nu=1.0, r=5.0, kappa=-1.4,
            sigma=-1.5, b_env=2.0, k_env=0.05)
n_half = weighted_norm(nonlinear_term(psi, RenormConfig(params=Params(
    d=2, gamma=2.0, beta=0.5, p=2.0, nu=1.0, r=5.0, kappa=-1.4, sigma=-1.5,
    b_env=2.0, k_env=0.05), grid=grid)), wv, 2.0)
n_one = weighted_norm(nonlinear_term(psi, RenormConfig(params=Pc, grid=grid)), wv, 2.0)
print("collapse: N(beta~1)", n_one, "N(0.5)", n_half, "ratio", n_one / n_half)
lap("collapse")

# 7. contraction at beta=0.99, amplitude a and a/10
P99 = Params(d=2, gamma=2.0, beta=0.99, p=2.0, nu=1.0, r=5.0, kappa=-1.4,
             sigma=-1.5, b_env=2.0, k_env=0.05)
cfg99 = RenormConfig(params=P99, grid=grid)
wu = WeightSpec.physical(P99.nu)
unit = psi.scale(1.0 / psi.amplitude())
lin_ratio = weighted_norm(linear_term(unit, cfg99), wu, 2.0) / weighted_norm(unit, wu, 2.0)
print("pure linear ratio:", lin_ratio, "rate:", linear_rate(P99),
      "rel dev:", abs(lin_ratio - linear_rate(P99)) / linear_rate(P99))
for a in (1e-3, 1e-4):
    fa = unit.scale(a)
    ratio = weighted_norm(apply_renorm(fa, cfg99), wu, 2.0) / weighted_norm(fa, wu, 2.0)
    print(f"a={a}: ratio {ratio!r} dev from linear {abs(ratio - lin_ratio):.3e}")
lap("contraction")

# 8. I-functional identity for L
steep = member(np.random.default_rng(23), steep=True)
i_in = I_functional(steep, P2.alpha, P2.gamma)
i_out = I_functional(linear_term(steep, cfg), P2.alpha, P2.gamma)
pred = P2.beta ** (P2.c + P2.alpha + P2.d) * i_in
print("I identity: out", i_out, "pred", pred, "rel", abs(i_out - pred) / abs(pred))
lap("I identity")

# 9. M_mu invariance
mu = 2.0 * der.mu_min if math.isfinite(der.mu_min) else 0.005
print("mu used:", mu)
mm = member_M_mu(env, P2.alpha, mu, P2.gamma, grid, dim=2)
i_m = I_functional(mm, P2.alpha, P2.gamma)
img_m = apply_renorm(mm, cfg)
i_img = I_functional(img_m, P2.alpha, P2.gamma)
print("I(member)", i_m, "I(image)", i_img, "slack", i_img - mu)
lap("M_mu")

# 10. norm bound fit
rep = norm_bound_report(psi, cfg)
print(rep.line())
print("fitted", rep.fitted)
lap("bound fit")

# 11. equitightness
eq = equitightness_margin(psi, cfg)
print(eq.line())
print("in:", eq.input_measures, "out:", eq.image_measures, "bound", eq.bound)
lap("equitightness")

# 12. triv family
cfg_t = RenormConfig(params=par3, grid=grid)   # d=2 gamma=3 c=0
fam = triv_fixed_family(lambda th: 1.0, cfg_t, r_cap=5.0)
prof = fam.harmonics[(0, "cos")]
ref_vals = np.exp(prof.grid.nodes ** 3)
print("family value rel err:", float(np.max(np.abs(prof.values / ref_vals - 1.0))))
print("linear residual d=2 g=3:", fixed_family_linear_residual(cfg_t, 5.0))
par32 = Params(d=3, gamma=2.0, beta=0.5)
print("linear residual d=3 g=2:",
      fixed_family_linear_residual(RenormConfig(params=par32, grid=grid), 5.0))

# full residual on truncated window
cfg_fam = RenormConfig(params=par3, grid=fam.grid)
img_fam = apply_renorm(fam, cfg_fam)
keep = fam.grid.nodes <= par3.beta * 5.0
relres = np.abs(img_fam.harmonics[(0, "cos")].values[keep]
                - prof.values[keep]) / prof.values[keep]
print("full family residual on window:", float(np.max(relres)))
lap("triv family")

# 13. so2 residuals
g2 = ScalarRadialProfile(grid=grid, values=np.exp(-grid.nodes**2) * grid.nodes,
                         origin_power=1.0)
eq2 = AzimuthalField.radial(g2, dim=2)
res_eq = so2_cancellation_residual(eq2, cfg)
print("so2 equivariant d=2:", res_eq)
bump = AzimuthalField(dim=2, grid=grid, harmonics={
    (0, "cos"): g2, (2, "cos"): g2.scaled(0.3)})
res_bump = so2_cancellation_residual(bump, cfg)
print("so2 bump d=2:", res_bump)
zero2 = AzimuthalField(dim=2, grid=grid, harmonics={
    (0, "cos"): ScalarRadialProfile(grid=grid, values=np.zeros(grid.size))})
print("so2 zero:", so2_cancellation_residual(zero2, cfg))
lap("so2 d=2")

P3 = Params(d=3, gamma=2.0, beta=0.9, p=2.0, nu=1.0, r=5.0, kappa=-1.4)
cfg3 = RenormConfig(params=P3, grid=grid)
prof3 = ScalarRadialProfile(grid=grid, values=np.exp(-grid.nodes**2) * grid.nodes,
                            origin_power=1.0)
f3 = AzimuthalField.radial(prof3, dim=3)
res3 = so2_cancellation_residual(f3, cfg3, eta_samples=[1.0], n_angle=64, n_t=4)
print("so2 equivariant d=3:", res3)
lap("so2 d=3")

# 14. d=3 linear spot check + apply == linear
L3 = linear_term(f3, cfg3)
q = grid.nodes / P3.beta
expect = (P3.beta ** P3.c * np.exp(grid.nodes**2 * (1 - P3.beta**-2))
          * np.exp(-(q**2)) * q)
got = L3.polar_profiles[0].values
mask = expect > 1e-12 * expect.max()
print("d=3 linear closed-form rel err:",
      float(np.max(np.abs(got[mask] / expect[mask] - 1.0))))
A3 = apply_renorm(f3, cfg3)
same = all(np.array_equal(a.values, b.values)
           for a, b in zip(A3.polar_profiles, L3.polar_profiles))
print("d=3 apply == linear:", same)

# parity / transversality on the image
pts = np.array([[0.3, 0.4], [1.0, -0.2], [2.0, 1.0], [0.05, 0.01]])
v_plus = image.vector_at(pts)
v_minus = image.vector_at(-pts)
print("parity residual:", float(np.max(np.abs(v_plus + v_minus))))
print("transversality:", float(np.max(np.abs(np.sum(v_plus * pts, axis=1)))))
lap("d=3 + parity")
