"""Command-line front end: batch simulation, analysis reports, constants.

Subcommands:
  simulate --config <path> --out <dir> [--jobs N] [--svg]
  analyze  --config <path> --out <dir>
  zeros

The environment variable UNOBS_STAB_SEED overrides the config seed.  Exit
code 0 from simulate means every run met its thresholds with no
dissipativity violations.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import observability, spectral
from .artifacts import write_csv, write_summary, write_trajectory_svg
from .bessel import find_zeros
from .config import ConfigError, ScenarioConfig, parse_config
from .finite import FinParams, delta_margin, rotation_plant
from .linalg import place_poles
from .observability import (
    check_bound_inequalities,
    choose_radii,
    determinant_identity_check,
    max_control_bound,
    observability_gramian,
)
from .sim import IntegratorConfig, convergence_metrics, run_finite_loop, run_spectral_loop
from .spectral import OutputSpec, SpectralParams, output_vector, weak_norm_bound

SEED_ENV = "UNOBS_STAB_SEED"


def _effective_seed(cfg: ScenarioConfig) -> int:
    env = os.environ.get(SEED_ENV)
    return int(env) if env else cfg.seed


def _ball_points(rng, count: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform(size=count))
    th = rng.uniform(0.0, 2.0 * math.pi, size=count)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def draw_initial_conditions(cfg: ScenarioConfig, seed: int):
    """Initial (x0, xhat0) pairs: the explicit list if given, otherwise
    seeded uniform draws in the configured balls."""
    if cfg.x0 is not None:
        return [(cfg.x0[i].copy(), cfg.xhat0[i].copy())
                for i in range(cfg.x0.shape[0])]
    rng = np.random.default_rng(seed)
    radius_x = cfg.init_radius_x if cfg.init_radius_x is not None else cfg.rho
    radius_xh = cfg.init_radius_xhat if cfg.init_radius_xhat is not None else radius_x
    xs = _ball_points(rng, cfg.init_count, radius_x)
    xhs = _ball_points(rng, cfg.init_count, radius_xh)
    return [(xs[i], xhs[i]) for i in range(cfg.init_count)]


def build_finite(cfg: ScenarioConfig):
    plant = rotation_plant()
    gain = cfg.K if cfg.K is not None else place_poles(plant.A, plant.b, cfg.poles)
    delta = cfg.delta
    if delta is None:
        rho = cfg.rho if cfg.rho is not None else cfg.init_radius_x
        delta = cfg.delta_frac * delta_margin(gain, rho, plant)
    params = FinParams(K=gain, delta=delta, alpha=cfg.alpha, rho=cfg.rho)
    return plant, params


def build_spectral(cfg: ScenarioConfig):
    gain = cfg.K if cfg.K is not None else place_poles(
        rotation_plant().A, rotation_plant().b, cfg.poles)
    j = cfg.j_frac * find_zeros().j1
    params = SpectralParams(K=gain, delta=cfg.delta, alpha=cfg.alpha,
                            Delta=cfg.Delta, mu=cfg.mu, j=j, N=cfg.N)
    spec = OutputSpec(kind=cfg.output_kind, mu=cfg.mu, coeffs=cfg.output_coeffs)
    return spec, params


def _run_one(args):
    cfg, index, x0, xhat0 = args
    icfg = IntegratorConfig(method=cfg.method, step=cfg.step, horizon=cfg.horizon,
                            record_every=cfg.record_every)
    if cfg.strategy == "finite":
        plant, params = build_finite(cfg)
        from .finite import embed as embed_fin
        traj = run_finite_loop(plant, params, x0, embed_fin(xhat0), icfg)
    else:
        spec, params = build_spectral(cfg)
        traj = run_spectral_loop(spec, params, x0, xhat0, icfg)
    return index, traj


def run_scenario(cfg: ScenarioConfig, out_dir: str, jobs: int = 1,
                 svg: bool = False) -> int:
    """Execute all runs of a scenario, write artifacts, return the exit code
    (0 iff every run passed its thresholds with no dissipativity violations)."""
    os.makedirs(out_dir, exist_ok=True)
    seed = _effective_seed(cfg)
    pairs = draw_initial_conditions(cfg, seed)
    tasks = [(cfg, i, x0, xh0) for i, (x0, xh0) in enumerate(pairs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    results.sort(key=lambda item: item[0])

    summary: dict = {"strategy": cfg.strategy, "seed": seed, "runs": len(results)}
    all_pass = True
    for index, traj in results:
        name = f"run_{index:03d}"
        write_csv(os.path.join(out_dir, name + ".csv"), traj)
        if svg:
            write_trajectory_svg(os.path.join(out_dir, name + ".svg"), traj, name)
        metrics = convergence_metrics(traj)
        passed = (not metrics["diverged"]
                  and metrics["dissipativity_violations"] == 0
                  and metrics["trailing_max_x"] <= cfg.trailing_x_max
                  and metrics["final_c_eps_abs"] <= cfg.final_c_eps_max)
        all_pass = all_pass and passed
        for key in ("trailing_max_x", "final_eps_norm", "final_c_eps_abs",
                    "final_weak_eps", "dissipativity_violations", "max_eps_increase",
                    "clamp_count", "diverged"):
            value = metrics[key]
            if isinstance(value, bool):
                value = int(value)
            summary[f"{name}.{key}"] = value
        summary[f"{name}.pass"] = int(passed)
    summary["overall.pass"] = int(all_pass)
    write_summary(os.path.join(out_dir, "summary.txt"), summary)
    return 0 if all_pass else 1


def analyze(cfg: ScenarioConfig, out_dir: str) -> str:
    """Observability analysis report: determinant identity, Gramian sweep,
    control bound applicability, parameter-budget inequalities."""
    os.makedirs(out_dir, exist_ok=True)
    seed = _effective_seed(cfg)
    report: dict = {"seed": seed}

    det = determinant_identity_check(cfg.analyze_trials, seed)
    report["det_check.trials"] = det.trials
    report["det_check.max_rel_err"] = det.max_rel_err
    report["det_check.singular_when_unperturbed"] = int(det.singular_when_unperturbed)

    if cfg.strategy == "finite":
        plant, _ = build_finite(ScenarioConfig(**{**cfg.__dict__, "delta": cfg.delta or 1.0}))
        gain = cfg.K if cfg.K is not None else place_poles(plant.A, plant.b, cfg.poles)
        delta = cfg.delta if cfg.delta is not None else 0.0
        from .finite import observability_certificate
        q = observability_certificate(gain, plant.A, delta, cfg.alpha)
        rank = int(np.linalg.matrix_rank(q, tol=1e-10))
        report["certificate.delta"] = delta
        report["certificate.rank"] = rank
        report["certificate.full_rank"] = int(rank == plant.n + 2)
        if delta == 0.0:
            report["certificate.singular"] = 1

    mu = cfg.mu if cfg.mu is not None else 1.0
    n_tr = min(cfg.N, 12)
    kind = cfg.output_kind if cfg.output_kind is not None else spectral.NORM_SQ
    spec = OutputSpec(kind=kind, mu=mu, coeffs=cfg.output_coeffs)
    zeta = output_vector(spec, n_tr)
    for u in cfg.analyze_u_grid:
        rep = observability_gramian(float(u), 2.0 * math.pi, zeta, mu, n_tr, steps=400)
        report[f"gramian.u_{u:g}.lambda_min"] = rep.lambda_min
        report[f"gramian.u_{u:g}.lambda_max"] = rep.lambda_max

    zeros = find_zeros()
    j = cfg.j_frac * zeros.j1
    gain = cfg.K if cfg.K is not None else np.array([1.0, -2.0])
    kappa = float(np.linalg.norm(gain))
    delta = cfg.delta if cfg.delta is not None else 0.0
    umax, applicable = max_control_bound(kappa, j, mu, delta)
    report["umax.value"] = umax
    report["umax.mu_umax"] = mu * umax
    report["umax.j0"] = zeros.j0
    report["umax.applicable"] = int(applicable)

    # the budget's leading term scales with kappa and is (mu, delta, Delta)-
    # independent, so the search only closes for small gains; cap it here
    bounds = choose_radii(cfg.analyze_R0, kappa=min(kappa, 0.2))
    res1, res2 = check_bound_inequalities(bounds)
    for key in ("R0", "R1", "R2", "mu", "delta", "Delta", "kappa", "nu", "M",
                "ell_pi", "ell_tau"):
        report[f"bounds.{key}"] = getattr(bounds, key)
    report["bounds.ineq1_residual"] = res1
    report["bounds.ineq2_residual"] = res2
    report["bounds.satisfied"] = int(res1 < 0.0 and res2 < 0.0)

    path = os.path.join(out_dir, "analysis.txt")
    write_summary(path, report)
    return path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="unobs-stab",
                                     description="Output-feedback stabilization toolbox")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario batch")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--jobs", type=int, default=1)
    p_sim.add_argument("--svg", action="store_true")

    p_an = sub.add_parser("analyze", help="observability analysis report")
    p_an.add_argument("--config", required=True)
    p_an.add_argument("--out", required=True)

    sub.add_parser("zeros", help="print j0, j1 and the weak-norm constant")

    args = parser.parse_args(argv)
    if args.command == "zeros":
        zeros = find_zeros()
        print("j0=%.17g" % zeros.j0)
        print("j1=%.17g" % zeros.j1)
        print("nu=%.17g" % weak_norm_bound())
        return 0

    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    for warning in cfg.warnings:
        print(f"warning: {warning}", file=sys.stderr)

    if args.command == "simulate":
        code = run_scenario(cfg, args.out, jobs=args.jobs, svg=args.svg)
        print(f"summary written to {os.path.join(args.out, 'summary.txt')}")
        return code
    path = analyze(cfg, args.out)
    print(f"analysis written to {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
