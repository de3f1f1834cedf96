"""Batch command line: reproducible experiments over the whole package.

Each invocation reads one configuration file, writes a manifest that
is sufficient to re-run it, executes a single command, and leaves its
results as plain text artifacts in the output directory. Module
errors and failed verifications produce a machine-readable
``error.txt`` and a nonzero exit status instead of a traceback.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .artifacts import (
    emit_plot_data,
    load_field,
    save_field,
    write_error_record,
    write_manifest,
)
from .bounds import envelope_domination, wk_defining_quadrature, wk_exact
from .config import COMMANDS, ExperimentConfig, load_config
from .exceptions import ParameterError
from .fields import AzimuthalField, WeightSpec, weighted_norm
from .fixedpoint import (
    invariance_sample_test,
    picard_iterate,
    sample_envelope_member,
)
from .grids import ScalarRadialProfile
from .params import (
    check_nontrivial_hypotheses,
    check_trivial_hypotheses,
    witness_search,
)
from .renorm import (
    RenormConfig,
    apply_renorm,
    fixed_family_linear_residual,
    linear_rate,
    so2_cancellation_residual,
)
from .selfsimilar import (
    SelfSimilarProfile,
    build_selfsimilar,
    evolve_picard,
    mild_residual,
    norm_curve,
)

THREADS_ENV = "RENORMFLOW_THREADS"


class VerificationFailure(RuntimeError):
    """A check command ran to completion and found a violation."""


def _operator_config(cfg: ExperimentConfig, grid, beta: float | None = None):
    params = cfg.params if beta is None else replace(cfg.params, beta=beta)
    it = cfg.iteration
    return RenormConfig(
        params=params, grid=grid, n_t=it.n_t, n_angle=it.n_angle,
        harmonic_cap=it.harmonic_cap, kernel_rho_points=it.kernel_rho_points,
    )


def _start_field(cfg: ExperimentConfig):
    """Input field plus the grid every computation must share.

    A stored field brings its own grid, which then overrides the grid
    section; without one, a random envelope member is drawn from the
    configured grid and seed.
    """
    if cfg.field_io.input_path:
        psi = load_field(cfg.field_io.input_path)
        return psi, psi.grid
    grid = cfg.grid.build()
    rng = np.random.default_rng(cfg.seed)
    return sample_envelope_member(grid, cfg.params, rng), grid


def _write_report(out: Path, name: str, lines: list[str]) -> Path:
    path = out / name
    path.write_text("\n".join(lines) + "\n")
    return path


def _cmd_feasibility(cfg: ExperimentConfig, out: Path) -> None:
    pr = cfg.params
    triv = check_trivial_hypotheses(pr)
    nontriv = check_nontrivial_hypotheses(pr)
    _write_report(
        out, "hypotheses.txt", [triv.to_text(), "", nontriv.to_text()]
    )
    witness = witness_search(pr.d, pr.gamma, seed=cfg.seed)
    if witness is None:
        raise VerificationFailure(
            f"no witness found for d={pr.d}, gamma={pr.gamma}"
        )
    wcfg = replace(cfg, params=witness, envelope=None)
    (out / "witness.cfg").write_text(wcfg.to_text())
    _write_report(
        out, "witness_report.txt",
        [check_nontrivial_hypotheses(witness).to_text()],
    )


def _cmd_renorm_apply(cfg: ExperimentConfig, out: Path) -> None:
    psi, grid = _start_field(cfg)
    rcfg = _operator_config(cfg, grid)
    image = apply_renorm(psi, rcfg)
    save_field(out / cfg.field_io.output_name, image)
    wspec = WeightSpec.fourier(cfg.params.nu, cfg.params.b_env)
    _write_report(out, "summary.tsv", [
        "quantity\tvalue",
        f"norm_in\t{weighted_norm(psi, wspec, cfg.params.p):.17g}",
        f"norm_out\t{weighted_norm(image, wspec, cfg.params.p):.17g}",
        f"linear_rate\t{linear_rate(cfg.params):.17g}",
    ])


def _cmd_fixed_point(cfg: ExperimentConfig, out: Path) -> None:
    psi, grid = _start_field(cfg)
    it = cfg.iteration
    psi0 = psi.scale(it.start_scale)
    rcfg = _operator_config(cfg, grid)
    final, trace = picard_iterate(
        psi0, rcfg, damping=it.damping, tol=it.tol, max_iter=it.max_iter,
        anderson=it.anderson,
    )
    (out / "trace.tsv").write_text(trace.tsv())
    save_field(out / cfg.field_io.output_name, final)
    emit_plot_data(out, {"trace": trace})
    _write_report(out, "summary.tsv", [
        "quantity\tvalue",
        f"reason\t{trace.reason}",
        f"iterations\t{len(trace.steps) - 1}",
        f"final_residual\t{trace.final_residual:.17g}",
    ])


def _cmd_verify_invariants(cfg: ExperimentConfig, out: Path) -> None:
    grid = cfg.grid.build()
    inv = cfg.invariance

    def audit(item):
        index, beta = item
        rcfg = _operator_config(cfg, grid, beta=beta)
        return beta, invariance_sample_test(
            rcfg, inv.set_spec, inv.samples, seed=cfg.seed + index
        )

    jobs = list(enumerate(inv.betas))
    if cfg.threads > 1 and not cfg.deterministic and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            reports = dict(pool.map(audit, jobs))
    else:
        reports = dict(audit(job) for job in jobs)
    lines = [f"beta={beta:g}  {reports[beta].line()}" for _, beta in jobs]
    failed = sum(len(reports[beta].failures) for _, beta in jobs)
    lines.append(f"overall\t{'pass' if failed == 0 else 'FAIL'}")
    _write_report(out, "invariance_report.txt", lines)
    if failed:
        raise VerificationFailure(
            f"{failed} mapped samples left the {inv.set_spec} set"
        )


def _cmd_wk_check(cfg: ExperimentConfig, out: Path) -> None:
    grid = cfg.grid.build()
    radii = np.geomspace(0.05, 0.75 * grid.r_max, cfg.wk.samples)
    lines = ["k\tmax_quadrature_dev\tdomination"]
    for k in cfg.wk.k_values:
        exact = wk_exact(cfg.params, k, grid)(radii)
        quad = wk_defining_quadrature(cfg.params, k, radii)
        dev = float(np.max(np.abs(exact - quad)))
        dom = envelope_domination(cfg.params, k, grid)
        lines.append(f"{k:g}\t{dev:.3e}\t{dom.line()}")
    _write_report(out, "wk_report.txt", lines)


def _cmd_leray_profile(cfg: ExperimentConfig, out: Path) -> None:
    psi, _ = _start_field(cfg)
    profile = SelfSimilarProfile(psi=psi, params=cfg.params)
    ls = cfg.leray
    curve = norm_curve(
        profile, ls.kind, list(ls.times), m=ls.m, x_max=ls.x_max,
        route=ls.route,
    )
    (out / "curve.tsv").write_text(curve.tsv())
    emit_plot_data(out, {"norm_curve": curve})
    _write_report(out, "summary.tsv", [
        "quantity\tvalue",
        f"kind\t{curve.kind}",
        f"order\t{curve.order:.17g}",
        f"fitted_slope\t{curve.slope:.17g}",
        f"predicted_slope\t{curve.predicted_slope:.17g}",
        f"slope_deviation\t{abs(curve.slope - curve.predicted_slope):.3e}",
    ])


def _cmd_evolve_check(cfg: ExperimentConfig, out: Path) -> None:
    psi, grid = _start_field(cfg)
    rcfg = _operator_config(cfg, grid)
    pr = cfg.params
    ev = cfg.evolve
    times = list(ev.times)

    heat = evolve_picard(psi, rcfg, times, nonlinear=False)
    heat_dev = 0.0
    for key, prof in psi.harmonics.items():
        exact = prof.values * np.exp(-(grid.nodes**pr.gamma) * times[-1])
        got = heat.fields[-1].harmonics[key].values
        scale = float(np.max(np.abs(exact)))
        if scale > 0.0:
            heat_dev = max(heat_dev, float(np.max(np.abs(got - exact))) / scale)
    lines = ["quantity\tvalue", f"heat_semigroup_dev\t{heat_dev:.3e}"]

    if ev.nonlinear:
        profile = SelfSimilarProfile(psi=psi, params=pr)
        v0 = build_selfsimilar(profile, 0.0)
        eps = mild_residual(profile, 0.0, times[-1], cfg=rcfg)
        run = evolve_picard(
            v0, rcfg, times, inner_tol=ev.inner_tol,
            max_inner=ev.max_inner, nonlinear=True,
        )
        wspec = WeightSpec.fourier(pr.nu, pr.b_env)
        rows = []
        for t, fld in zip(run.times, run.fields):
            pred = build_selfsimilar(profile, t)
            dev = weighted_norm(fld.subtract(pred), wspec, pr.p)
            rows.append((t, dev, weighted_norm(pred, wspec, pr.p)))
        devn = rows[-1][1]
        lines += [
            f"fixed_point_residual\t{eps:.17g}",
            f"tracking_deviation\t{devn:.17g}",
            f"deviation_over_residual\t{devn / eps if eps > 0 else math.inf:.17g}",
            f"inner_converged\t{int(run.converged)}",
        ]
        emit_plot_data(
            out, {"tracking": (["t", "deviation", "prediction_norm"], rows)}
        )
    _write_report(out, "evolve_report.tsv", lines)
    if heat_dev > 1e-8:
        raise VerificationFailure(
            f"heat semigroup deviation {heat_dev:.3e} exceeds 1e-8"
        )


def _cmd_symmetry_check(cfg: ExperimentConfig, out: Path) -> None:
    psi, grid = _start_field(cfg)
    rcfg = _operator_config(cfg, grid)
    gauss = ScalarRadialProfile(
        grid=grid, values=grid.nodes * np.exp(-grid.nodes**2), origin_power=1.0
    )
    from .fields import AzimuthalField

    equivariant = AzimuthalField.radial(gauss, dim=cfg.params.d)
    so2 = so2_cancellation_residual(equivariant, rcfg)

    image = apply_renorm(psi, rcfg)
    pts = np.array([[0.3, 0.4], [1.0, -0.2], [2.0, 1.0], [0.05, 0.01]])
    if cfg.params.d == 3:
        pts = np.hstack([pts, np.full((len(pts), 1), 0.25)])
    v_plus = image.vector_at(pts)
    v_minus = image.vector_at(-pts)
    parity = float(np.max(np.abs(v_plus + v_minus)))
    transversal = float(np.max(np.abs(np.sum(v_plus * pts, axis=1))))
    family = fixed_family_linear_residual(rcfg)

    checks = [
        ("so2_cancellation", so2, 1e-6),
        ("odd_parity", parity, 1e-10),
        ("transversality", transversal, 1e-14),
        ("fixed_family_linear", family, 0.0),
    ]
    lines = ["check\tvalue\tthreshold\tpass"]
    bad = []
    for name, value, threshold in checks:
        ok = value <= threshold
        lines.append(f"{name}\t{value:.3e}\t{threshold:.1e}\t{int(ok)}")
        if not ok:
            bad.append(name)
    _write_report(out, "symmetry_report.tsv", lines)
    if bad:
        raise VerificationFailure(f"symmetry checks failed: {', '.join(bad)}")


_RUNNERS = {
    "feasibility": _cmd_feasibility,
    "renorm-apply": _cmd_renorm_apply,
    "fixed-point": _cmd_fixed_point,
    "verify-invariants": _cmd_verify_invariants,
    "wk-check": _cmd_wk_check,
    "leray-profile": _cmd_leray_profile,
    "evolve-check": _cmd_evolve_check,
    "symmetry-check": _cmd_symmetry_check,
}


def run(cfg: ExperimentConfig) -> int:
    """Execute one configured command, returning a process exit status.

    The manifest goes out before the command starts, so even a failed
    directory carries everything needed to reproduce the failure.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, cfg.to_text())
    try:
        _RUNNERS[cfg.command](cfg, out)
    except Exception as exc:
        write_error_record(out, exc)
        print(f"{cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="renormflow",
        description="batch experiments on the renormalization operator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=f"run the {name} experiment")
        cmd.add_argument("--config", required=True, help="configuration file")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument(
            "--threads", type=int, default=None,
            help=f"worker threads (default: ${THREADS_ENV} or config)",
        )
        cmd.add_argument(
            "--deterministic", action="store_true",
            help="serial reductions and serial workers",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (OSError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    updates: dict = {"command": args.command}
    if args.out is not None:
        updates["out_dir"] = args.out
    if args.seed is not None:
        updates["seed"] = args.seed
    env_threads = os.environ.get(THREADS_ENV)
    if args.threads is not None:
        updates["threads"] = args.threads
    elif env_threads is not None:
        try:
            updates["threads"] = int(env_threads)
        except ValueError:
            print(f"ignoring non-integer ${THREADS_ENV}", file=sys.stderr)
    if args.deterministic:
        updates["deterministic"] = True
    try:
        cfg = replace(cfg, **updates)
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    status = run(cfg)
    if status == 0:
        print(f"{cfg.command}: artifacts in {cfg.out_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
