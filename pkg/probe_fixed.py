import math
import time

import numpy as np

from renormflow.fields import (
    AzimuthalField,
    I_functional,
    WeightSpec,
    weighted_norm,
)
from renormflow.grids import RadialGrid, ScalarRadialProfile
from renormflow.params import Params, derived_constants
from renormflow.renorm import RenormConfig, apply_renorm, linear_rate, triv_fixed_family
from renormflow.fixedpoint import (
    contraction_estimate,
    invariance_sample_test,
    picard_iterate,
    power_consistency,
    residual,
    sample_envelope_member,
    sample_mass_member,
)

t0 = time.time()


def lap(msg):
    global t0
    print(f"--- {msg}  [{time.time() - t0:.1f}s]")
    t0 = time.time()


P2 = Params(d=2, gamma=2.0, beta=0.9, p=2.0, nu=1.0, r=5.0, kappa=-1.4,
            sigma=-1.5, alpha=-2.0, b_env=2.0, k_env=0.05, mu=0.0045)
grid = RadialGrid.build()
cfg = RenormConfig(params=P2, grid=grid)

# zero start
zero = AzimuthalField(dim=2, grid=grid, harmonics={
    (0, "cos"): ScalarRadialProfile(grid=grid, values=np.zeros(grid.size))})
_, tr = picard_iterate(zero, cfg)
print("zero:", tr.reason, "steps", len(tr.steps), "resid", tr.final_residual)
lap("zero")

# radial cheap member
r = grid.nodes
base = P2.k_env * np.exp(P2.sigma * np.log(r) - P2.b_env * r)
radial = AzimuthalField.radial(ScalarRadialProfile(
    grid=grid, values=0.9 * base, origin_power=P2.sigma,
    tail_power=P2.sigma, tail_rate=P2.b_env), dim=2)
wu = WeightSpec.physical(P2.nu)
der = derived_constants(P2)
small = radial.scale(0.5 * der.a_hat / weighted_norm(radial, wu, P2.p))
print("start u-norm", weighted_norm(small, wu, P2.p), "a_hat", der.a_hat)

psi_star, tr = picard_iterate(small, cfg, damping=1.0, tol=1e-14, max_iter=8)
print("small:", tr.reason, "residuals:")
res = tr.residuals
for i, v in enumerate(res):
    ratio = res[i] / res[i - 1] if i else float("nan")
    print(f"  {i}: {v:.6e}  ratio {ratio:.6f}")
print("rate:", linear_rate(P2))
lap("small picard")

# residual == direct
rr = residual(small, cfg)
img = apply_renorm(small, cfg)
direct = weighted_norm(img.subtract(small), WeightSpec.fourier(P2.nu, P2.b_env), P2.p)
print("residual direct match:", rr, direct, abs(rr - direct))

# power consistency
eps = residual(psi_star, cfg)
p1 = power_consistency(psi_star, cfg, 1)
p2 = power_consistency(psi_star, cfg, 2)
print("eps", eps, "p1", p1, "identical:", p1 == eps)
print("p2", p2, "K =", p2 / (2 * eps))
try:
    power_consistency(psi_star, cfg, 29)
    print("coverage guard MISSED")
except Exception as e:
    print("coverage guard:", type(e).__name__)
lap("power")

# divergence
big = radial.scale(5e5 / weighted_norm(radial, WeightSpec.fourier(P2.nu, P2.b_env), P2.p))
_, trd = picard_iterate(big, cfg, max_iter=4)
print("diverge:", trd.reason, "norms", [f"{s.norm:.3e}" for s in trd.steps])
lap("diverge")

# budget
_, trb = picard_iterate(small, cfg, max_iter=0)
print("budget:", trb.reason, len(trb.steps))

# bitwise reproducibility
_, tra = picard_iterate(small, cfg, damping=0.5, max_iter=3)
_, trb2 = picard_iterate(small, cfg, damping=0.5, max_iter=3)
print("bitwise:", tra.residuals == trb2.residuals, tra.residuals[:3])
lap("repro")

# anderson
_, trA = picard_iterate(small, cfg, damping=0.5, max_iter=6, anderson=True)
print("anderson:", trA.reason, [f"{v:.3e}" for v in trA.residuals])
lap("anderson")

# restore mass (steep member so the scale functional converges)
sig2 = P2.epsilon - P2.d - P2.alpha
steep_base = P2.k_env * np.exp(
    np.minimum(P2.sigma * np.log(r), sig2 * np.log(r)) - P2.b_env * r)
steep = AzimuthalField.radial(ScalarRadialProfile(
    grid=grid, values=0.9 * steep_base, origin_power=sig2,
    tail_power=P2.sigma, tail_rate=P2.b_env), dim=2)
m0 = I_functional(steep, P2.alpha, P2.gamma)
print("mass target", m0)
psi_m, trm = picard_iterate(steep, cfg, damping=0.5, max_iter=4, restore_mass=m0)
print("restore:", trm.reason, "final mass", I_functional(psi_m, P2.alpha, P2.gamma),
      "masses", [f"{s.mass:.5e}" for s in trm.steps])
lap("restore mass")

# triv family window ratio
pr3 = Params(d=2, gamma=3.0, beta=0.5)
cfg3 = RenormConfig(params=pr3, grid=grid)
fam = triv_fixed_family(lambda th: 1.0, cfg3, r_cap=5.0)
cfgf = RenormConfig(params=pr3, grid=fam.grid)
imgf = apply_renorm(fam, cfgf)
mask = fam.grid.nodes <= pr3.beta * 5.0
pf = fam.harmonics[(0, "cos")]
di = imgf.harmonics[(0, "cos")].values - pf.values
dmask = np.where(mask, di, 0.0)
fmask = np.where(mask, pf.values, 0.0)
wv3 = WeightSpec.fourier(pr3.nu, pr3.b_env)
num = weighted_norm(AzimuthalField.radial(ScalarRadialProfile(grid=fam.grid, values=dmask), dim=2), wv3, pr3.p)
den = weighted_norm(AzimuthalField.radial(ScalarRadialProfile(grid=fam.grid, values=fmask), dim=2), wv3, pr3.p)
print("family window norm ratio:", num / den)
lap("family")

# contraction estimate
P99 = Params(d=2, gamma=2.0, beta=0.99, p=2.0, nu=1.0, r=5.0, kappa=-1.4,
             sigma=-1.5, alpha=-2.0, b_env=2.0, k_env=0.05)
cfg99 = RenormConfig(params=P99, grid=grid)
est = contraction_estimate(cfg99, 1e-3, samples=2, seed=3)
print("contraction estimate:", est, "rate", linear_rate(P99),
      "rel dev", abs(est - linear_rate(P99)) / linear_rate(P99))
lap("contraction")

# invariance: envelope, mass, tail, zero samples
rep = invariance_sample_test(cfg, "envelope", samples=3, seed=5)
print(rep.line(), rep.margins)
rep = invariance_sample_test(cfg, "mass", samples=2, seed=5)
print(rep.line(), rep.margins)
rep = invariance_sample_test(cfg, "tail", samples=2, seed=5)
print(rep.line(), rep.margins)
rep = invariance_sample_test(cfg, "envelope", samples=0)
print("zero samples ok:", rep.ok)
lap("invariance")

# constructed violation: c < sigma
Pv = Params(d=2, gamma=1.2, beta=0.05, p=2.0, nu=1.0, r=5.0, kappa=-1.4,
            sigma=-1.5, alpha=-2.0, b_env=2.0, k_env=0.05)
print("violation c:", Pv.c, "< sigma", Pv.sigma)
cfgv = RenormConfig(params=Pv, grid=grid)
repv = invariance_sample_test(cfgv, "envelope", samples=6, seed=2)
print(repv.line())
print("margins:", [f"{m:.3f}" for m in repv.margins])
lap("violation")
