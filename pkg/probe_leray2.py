"""Scratch probe round 2; delete before commit."""
import math
import time

import numpy as np
import scipy.special as sp

from renormflow.fields import AzimuthalField
from renormflow.grids import RadialGrid, ScalarRadialProfile
from renormflow.params import Params
from renormflow.selfsimilar import (
    SelfSimilarProfile,
    _angular_kernels,
    _norm_grid,
    build_selfsimilar,
    fourier_l2_norm,
    inverse_fourier_azimuthal,
    norm_curve,
    physical_lp_norm,
)
from dataclasses import replace

grid = RadialGrid.build()
r = grid.nodes

print("=== radial kernel vs scipy ===")
z = np.geomspace(0.05, 600.0, 40)
n_w = 64 * int(math.ceil((2.4 * 600 + 48) / 64))
az, rad = _angular_kernels(z, [0, 2, 4], n_w)
for k in (2, 4):
    exact = 2 * math.pi * k * (-1.0) ** (k // 2) * sp.jv(k, z) / z
    err = np.max(np.abs(rad[k] - exact) / np.maximum(np.abs(exact), 1e-12))
    print(f"  degree {k}: max rel err {err:.3e}")

gauss = ScalarRadialProfile(grid=grid, values=np.exp(-r**2), origin_power=0.0)
k2prof = ScalarRadialProfile(grid=grid, values=0.5 * r**2 * np.exp(-r**2), origin_power=2.0)
fld_mix = AzimuthalField(dim=2, grid=grid, harmonics={(0, "cos"): gauss, (2, "sin"): k2prof})


def brute_u(field_, x_r, x_ang, n_rho=2401, n_phi=512):
    rho = np.linspace(1e-6, 12.0, n_rho)
    phi = np.linspace(0.0, 2 * math.pi, n_phi, endpoint=False)
    P, R = np.meshgrid(phi, rho)
    vals = np.zeros_like(R)
    for (deg, kind), prof in field_.harmonics.items():
        a = prof.evaluate(rho)
        ang = np.cos(deg * phi) if kind == "cos" else np.sin(deg * phi)
        vals += a[:, None] * ang[None, :]
    e_phi = np.stack([-np.sin(P), np.cos(P)])
    phase = np.exp(1j * R * x_r * np.cos(P - x_ang))
    integ = 1j * vals * phase * R
    w_rho = np.full(n_rho, rho[1] - rho[0]); w_rho[0] *= 0.5; w_rho[-1] *= 0.5
    u = np.einsum("vrp,rp,r->v", e_phi, integ, w_rho) * (2 * math.pi / n_phi)
    u /= (2 * math.pi) ** 2
    ex = np.array([-math.sin(x_ang), math.cos(x_ang)])
    er = np.array([math.cos(x_ang), math.sin(x_ang)])
    return u, ex, er


print("=== mix field: both components vs brute ===")
for x, ang in ((0.7, 0.3), (1.5, 1.1), (3.0, 2.2)):
    u, ex, er = brute_u(fld_mix, x, ang)
    mine = inverse_fourier_azimuthal(fld_mix, np.array([x]))
    maz = mine.azimuthal_on(np.array([ang]))[0, 0]
    mrad = mine.radial_on(np.array([ang]))[0, 0]
    baz = float(np.real(u) @ ex)
    brad = float(np.real(u) @ er)
    print(f"  x={x},a={ang}: az rel {abs(maz-baz)/abs(baz):.2e} "
          f"rad rel {abs(mrad-brad)/abs(brad):.2e} (mine {mrad:.6e} brute {brad:.6e})")

print("=== Parseval with both components ===")
xr, xw = _norm_grid(16.0)
u_mix = inverse_fourier_azimuthal(fld_mix, xr, weights=xw)
lhs = physical_lp_norm(u_mix, 2.0)
rhs = fourier_l2_norm(fld_mix) / (2 * math.pi)
print(f"  physical {lhs:.12e} fourier {rhs:.12e} rel {abs(lhs-rhs)/rhs:.2e}")

print("=== L2 curve value vs Parseval (k=0 snapshot) ===")
pr3 = Params(d=2, gamma=3.0, beta=0.9, p=2.0, nu=1.0, r=5.0, kappa=-1.4,
             sigma=-1.5, alpha=-2.0, b_env=2.0, k_env=0.05, mu=0.0045)
schwartz = ScalarRadialProfile(grid=grid, values=r**2 * np.exp(-r**2), origin_power=2.0)
fld_s = AzimuthalField(dim=2, grid=grid, harmonics={(0, "cos"): schwartz})
prof3 = SelfSimilarProfile(psi=fld_s, params=pr3)
snap0 = build_selfsimilar(prof3, 0.0)
pars = fourier_l2_norm(snap0) / (2 * math.pi)
print(f"  curve point0 0.14104360759903939 vs parseval {pars:.17g} "
      f"rel {abs(0.14104360759903939 - pars)/pars:.2e}")

print("=== dense-eval sup slope for gamma=4 ===")
pr4 = replace(pr3, gamma=4.0)
prof4 = SelfSimilarProfile(psi=fld_s, params=pr4, horizon=1.0)
dense = np.geomspace(0.02, 12.0, 4001)
amps = []
for t in (0.9, 0.99):
    snap = build_selfsimilar(prof4, t)
    amps.append(float(np.abs(snap.harmonics[(0, "cos")].evaluate(dense)).max()))
taus = [prof4.tau(t) for t in (0.9, 0.99)]
slope = math.log(amps[1] / amps[0]) / math.log(taus[1] / taus[0])
print(f"  slope {slope:.10f} expected -1, dev {abs(slope + 1):.2e}")

print("=== timing: single norm_curve m=2 after change ===")
t0 = time.time()
cur = norm_curve(prof3, "lebesgue", [0.0, 0.15, 0.3, 0.45, 0.6], m=2.0)
print(f"  slope {cur.slope:.8f} dev {abs(cur.slope - cur.predicted_slope):.2e} "
      f"value0 {cur.points[0].value:.17g} ({time.time()-t0:.1f}s)")
