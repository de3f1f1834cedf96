"""Scratch probe for the selfsimilar module; delete before commit."""
import math
import time

import numpy as np
import scipy.special as sp

from renormflow.fields import AzimuthalField, WeightSpec, weighted_norm
from renormflow.grids import RadialGrid, ScalarRadialProfile
from renormflow.params import Params
from renormflow.renorm import RenormConfig, apply_renorm
from renormflow.fixedpoint import residual, sample_envelope_member
from renormflow.selfsimilar import (
    NormCurve,
    PhysicalField,
    SelfSimilarProfile,
    _angular_kernels,
    build_selfsimilar,
    decay_exponent,
    evolve_picard,
    fourier_l2_norm,
    inverse_fourier_azimuthal,
    mild_residual,
    norm_curve,
    physical_lp_norm,
    sobolev_seminorm,
)
from dataclasses import replace

grid = RadialGrid.build()
r = grid.nodes

print("=== 1. angular kernel vs scipy Bessel derivative ===")
z = np.geomspace(0.05, 600.0, 40)
n_w = 64 * int(math.ceil((2.4 * 600 + 48) / 64))
ker = _angular_kernels(z, [0, 2, 4], n_w)
for k in (0, 2, 4):
    exact = 2.0 * math.pi * (-1.0) ** (k // 2) * sp.jvp(k, z)
    err = np.max(np.abs(ker[k] - exact) / np.maximum(np.abs(exact), 1e-12))
    print(f"  degree {k}: max rel err {err:.3e}")

print("=== 2. Gaussian transform vs brute force ===")
gauss = ScalarRadialProfile(grid=grid, values=np.exp(-r**2), origin_power=0.0)
fld_g = AzimuthalField(dim=2, grid=grid, harmonics={(0, "cos"): gauss})
k2prof = ScalarRadialProfile(grid=grid, values=0.5 * r**2 * np.exp(-r**2), origin_power=2.0)
fld_mix = AzimuthalField(dim=2, grid=grid, harmonics={(0, "cos"): gauss, (2, "sin"): k2prof})


def brute_u(field_, x_r, x_ang, n_rho=2401, n_phi=512):
    rho = np.linspace(1e-6, 12.0, n_rho)
    phi = np.linspace(0.0, 2 * math.pi, n_phi, endpoint=False)
    P, R = np.meshgrid(phi, rho)
    psi = field_.component_at(rho, 0.0) * 0.0  # placeholder shape
    vals = np.zeros_like(R)
    for (deg, kind), prof in field_.harmonics.items():
        a = prof.evaluate(rho)
        ang = np.cos(deg * phi) if kind == "cos" else np.sin(deg * phi)
        vals += a[:, None] * ang[None, :]
    e_phi = np.stack([-np.sin(P), np.cos(P)])        # unit azimuthal vector at eta
    phase = np.exp(1j * R * x_r * np.cos(P - x_ang))
    integ = 1j * vals * phase * R                    # i psi e_phi e^{i eta.x} rho
    w_rho = np.full(n_rho, rho[1] - rho[0]); w_rho[0] *= 0.5; w_rho[-1] *= 0.5
    u = np.einsum("vrp,rp,r->v", e_phi, integ, w_rho) * (2 * math.pi / n_phi)
    u /= (2 * math.pi) ** 2
    ex = np.array([-math.sin(x_ang), math.cos(x_ang)])   # e_phi at x
    er = np.array([math.cos(x_ang), math.sin(x_ang)])
    return u, ex, er


for x in (0.5, 1.0, 2.0):
    u, ex, er = brute_u(fld_g, x, 0.7)
    mine = inverse_fourier_azimuthal(fld_g, np.array([x]))
    mval = mine.component_on(np.array([0.7]))[0, 0]
    bval = float(np.real(u) @ ex)
    print(f"  x={x}: mine {mval:.10e} brute {bval:.10e} rel "
          f"{abs(mval-bval)/abs(bval):.2e} imag {np.max(np.abs(np.imag(u))):.1e} "
          f"radial {abs(float(np.real(u) @ er)):.1e}")

for x, ang in ((0.7, 0.3), (1.5, 1.1), (3.0, 2.2)):
    u, ex, er = brute_u(fld_mix, x, ang)
    mine = inverse_fourier_azimuthal(fld_mix, np.array([x]))
    mval = mine.component_on(np.array([ang]))[0, 0]
    bval = float(np.real(u) @ ex)
    print(f"  mix x={x},a={ang}: rel {abs(mval-bval)/abs(bval):.2e} "
          f"imag {np.max(np.abs(np.imag(u))):.1e} radial {abs(float(np.real(u)@er)):.1e}")

print("=== 3. Parseval ===")
from renormflow.selfsimilar import _norm_grid
xr, xw = _norm_grid(16.0)
u_mix = inverse_fourier_azimuthal(fld_mix, xr, weights=xw)
lhs = physical_lp_norm(u_mix, 2.0)
rhs = fourier_l2_norm(fld_mix) / (2 * math.pi)
print(f"  physical L2 {lhs:.12e} fourier/(2pi) {rhs:.12e} rel {abs(lhs-rhs)/rhs:.2e}")

print("=== 4. decay exponent, Lipschitz cone profile ===")
lip = ScalarRadialProfile(grid=grid, values=np.exp(-2.0 * r), origin_power=0.0,
                          tail_power=0.0, tail_rate=2.0)
fld_lip = AzimuthalField(dim=2, grid=grid, harmonics={(0, "cos"): lip})
t0 = time.time()
xs = np.geomspace(math.pi / 0.1, 3 * math.pi / 0.1, 7)
u_lip = inverse_fourier_azimuthal(fld_lip, xs)
print(f"  fit radii {xs[0]:.1f}..{xs[-1]:.1f}, exponent "
      f"{decay_exponent(u_lip, xs[0]):.6f}  ({time.time()-t0:.1f}s)")

print("=== 5. norm curves at d=2 gamma=3 ===")
pr3 = Params(d=2, gamma=3.0, beta=0.9, p=2.0, nu=1.0, r=5.0, kappa=-1.4,
             sigma=-1.5, alpha=-2.0, b_env=2.0, k_env=0.05, mu=0.0045)
schwartz = ScalarRadialProfile(grid=grid, values=r**2 * np.exp(-r**2), origin_power=2.0)
fld_s = AzimuthalField(dim=2, grid=grid, harmonics={(0, "cos"): schwartz})
prof3 = SelfSimilarProfile(psi=fld_s, params=pr3)
times = [0.0, 0.15, 0.3, 0.45, 0.6]
t0 = time.time()
for m in (2.0, 3.0, 4.0):
    cur = norm_curve(prof3, "lebesgue", times, m=m)
    print(f"  L^{m}: slope {cur.slope:.8f} predicted {cur.predicted_slope:.8f} "
          f"dev {abs(cur.slope - cur.predicted_slope):.2e}")
cur = norm_curve(prof3, "sobolev", times)
print(f"  H^gamma: slope {cur.slope:.8f} predicted {cur.predicted_slope:.8f} "
      f"dev {abs(cur.slope-cur.predicted_slope):.2e}  ({time.time()-t0:.1f}s)")
cur_s = norm_curve(prof3, "lebesgue", times, m=2.0, route="scaling")
print(f"  scaling route L2 values == predicted: "
      f"{all(p.value == p.predicted for p in cur_s.points[1:])}")
print(f"  point0 value {cur_s.points[0].value:.12e}")

print("=== 6. build_selfsimilar amplitudes ===")
snap = build_selfsimilar(prof3, 0.0)   # gamma = d+1 = 3: amplitude factor 1
dev = np.max(np.abs(snap.harmonics[(0, "cos")].values - schwartz.evaluate(r * 1.0)))
print(f"  gamma=d+1, T=1, t=0: max dev from psi {dev:.2e}")
pr4 = replace(pr3, gamma=4.0)
prof4 = SelfSimilarProfile(psi=fld_s, params=pr4, horizon=1.0)
t_pair = (0.9, 0.99)
amps = [build_selfsimilar(prof4, t).amplitude() for t in t_pair]
taus = [prof4.tau(t) for t in t_pair]
slope = math.log(amps[1] / amps[0]) / math.log(taus[1] / taus[0])
print(f"  sup-amplitude slope vs log tau: {slope:.10f} expected {2+1-4.0}")

print("=== 7. mild_residual ===")
pr2 = Params(d=2, gamma=2.0, beta=0.9, p=2.0, nu=1.0, r=5.0, kappa=-1.4,
             sigma=-1.5, alpha=-2.0, b_env=2.0, k_env=0.05, mu=0.0045)
rng = np.random.default_rng(7)
member = sample_envelope_member(grid, pr2, rng)
profm = SelfSimilarProfile(psi=member, params=pr2)
for t1 in (0.4, 0.2, 0.1, 0.05):
    res = mild_residual(profm, 0.0, t1)
    beta = (1.0 - t1) ** 0.5
    direct = residual(member, RenormConfig(params=replace(pr2, beta=beta), grid=grid))
    print(f"  t1={t1}: mild {res:.10e} direct {direct:.10e} equal {res == direct}")

print("=== 8. evolve: heat exactness, zero field ===")
cfg2 = RenormConfig(params=pr2, grid=grid)
ht = evolve_picard(member, cfg2, [0.04, 0.1], nonlinear=False)
exact_vals = {k: p.values * np.exp(-(r**2.0) * 0.1) for k, p in member.harmonics.items()}
dev = max(np.max(np.abs(ht.fields[-1].harmonics[k].values - exact_vals[k]))
          / max(np.max(np.abs(exact_vals[k])), 1e-300) for k in exact_vals)
print(f"  two-step heat vs closed form rel dev {dev:.2e} converged {ht.converged}")
zero = AzimuthalField(dim=2, grid=grid, harmonics={})
ez = evolve_picard(zero, cfg2, [0.1], nonlinear=True,
                   inner_tol=1e-12, max_inner=3)
print(f"  zero field stays zero: {all(not f.harmonics for f in ez.fields)} "
      f"converged {ez.converged}")

print("=== 9. evolve vs self-similar prediction ===")
cfg_fast = RenormConfig(params=pr2, grid=grid, kernel_rho_points=320, n_angle=48)
wspec = WeightSpec.fourier(pr2.nu, pr2.b_env)
for amp_scale in (1.0, 0.5):
    psi0 = member.scale(amp_scale)
    profe = SelfSimilarProfile(psi=psi0, params=pr2)
    v0 = build_selfsimilar(profe, 0.0)     # T=1: identical to psi0
    t1 = 0.2
    eps = mild_residual(profe, 0.0, t1, cfg=cfg_fast)
    t0c = time.time()
    ev = evolve_picard(v0, cfg_fast, [0.1, 0.2], inner_tol=1e-10, max_inner=10)
    pred = build_selfsimilar(profe, t1)
    devn = weighted_norm(ev.fields[-1].subtract(pred), wspec, pr2.p)
    scale = weighted_norm(pred, wspec, pr2.p)
    print(f"  amp {amp_scale}: residual {eps:.6e} deviation {devn:.6e} "
          f"K {devn/eps:.4f} rel_dev {devn/scale:.3e} "
          f"steps {[ (s.iterations, s.converged, f'{s.change:.1e}') for s in ev.steps ]} "
          f"({time.time()-t0c:.1f}s)")

print("=== 10. norm_curve tsv head ===")
print("\n".join(cur_s.tsv().splitlines()[:3]))
