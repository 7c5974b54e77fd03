"""Command-line entry point.

Subcommands share a config file of flat dotted keys (see config.py).  Exit
codes: 0 all checks pass, 1 at least one pass flag false, 2 config parse
failure, 3 config validation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigParseError, ConfigValidationError
from .reports import LDPReport, ReportRow, write_summary
from .sde import SolverConfig, solve_tilted
from .skeleton import ControlPath, rate_of_target, solve_skeleton
from .spectral import check_a1_tail, check_a2_modulus
from .verify import (TailBoundParams, chow_menaldi_check, convolution_eta2,
                     peszat_tail_check, verify_lower_bound, verify_upper_bound)
from .wiener import sample_wiener


def _write_trajectory_csv(path, traj):
    values = np.asarray(traj.values)
    d = values.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x_{k + 1}" for k in range(d)])
        for t, row in zip(traj.grid.nodes, values):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def _load_target_csv(path, grid):
    path = Path(path)
    if not path.is_file():
        raise ConfigValidationError(f"rate.target_csv: file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise ConfigValidationError("rate.target_csv: expected header starting with 't'")
    body = np.asarray([[float(v) for v in row] for row in rows[1:]], dtype=float)
    if body.shape[0] != grid.steps + 1:
        raise ConfigValidationError(
            f"rate.target_csv: expected {grid.steps + 1} rows, got {body.shape[0]}")
    return body[:, 1:]


def cmd_simulate(cfg, args):
    basis = cfgmod.build_basis(cfg)
    noise = cfgmod.build_noise(cfg)
    grid = cfgmod.build_grid(cfg)
    model = cfgmod.build_model(cfg, basis, noise)
    run = cfgmod.run_params(cfg)
    eps = cfg.get("run.epsilon", run["eps_list"][0])
    if not 0 < eps <= 1:
        raise ConfigValidationError(f"run.epsilon: must lie in (0, 1], got {eps}")
    run["output"].mkdir(parents=True, exist_ok=True)
    scfg = SolverConfig(epsilon=float(eps), steps=grid.steps, seed=run["seed"])
    for i in range(run["n_samples"]):
        w = sample_wiener(grid, noise, run["seed"], index=i)
        traj = solve_tilted(run["x"], model, basis, None, scfg, w)
        _write_trajectory_csv(run["output"] / f"trajectory_{i:04d}.csv", traj)
    print(f"wrote {run['n_samples']} trajectories to {run['output']}")
    return 0


def cmd_skeleton(cfg, args):
    basis = cfgmod.build_basis(cfg)
    noise = cfgmod.build_noise(cfg)
    grid = cfgmod.build_grid(cfg)
    model = cfgmod.build_model(cfg, basis, noise)
    run = cfgmod.run_params(cfg)
    phi = cfgmod.build_control(cfg, grid, noise)
    traj = solve_skeleton(run["x"], phi, model)
    run["output"].mkdir(parents=True, exist_ok=True)
    out = run["output"] / "skeleton.csv"
    _write_trajectory_csv(out, traj)
    print(f"skeleton energy {phi.energy():.6g}, path written to {out}")
    return 0


def cmd_rate(cfg, args):
    basis = cfgmod.build_basis(cfg)
    noise = cfgmod.build_noise(cfg)
    grid = cfgmod.build_grid(cfg)
    model = cfgmod.build_model(cfg, basis, noise)
    run = cfgmod.run_params(cfg)
    target = _load_target_csv(cfgmod._require(cfg, "rate.target_csv"), grid)
    tol = cfg.get("rate.tol", 1e-6)
    result = rate_of_target(run["x"], target, model, tol=float(tol))
    run["output"].mkdir(parents=True, exist_ok=True)
    payload = {"rate": None if np.isinf(result.value) else result.value,
               "finite": bool(np.isfinite(result.value)),
               "residual": result.residual}
    (run["output"] / "rate.json").write_text(json.dumps(payload, indent=2))
    print(f"rate {result.value:.6g} (residual {result.residual:.3g})")
    return 0


def cmd_verify_lower(cfg, args):
    basis = cfgmod.build_basis(cfg)
    noise = cfgmod.build_noise(cfg)
    grid = cfgmod.build_grid(cfg)
    model = cfgmod.build_model(cfg, basis, noise)
    run = cfgmod.run_params(cfg)
    phi = cfgmod.build_control(cfg, grid, noise)
    report = verify_lower_bound(run["x"], phi, run["delta"], run["gamma"],
                                run["eps_list"], model, basis, noise,
                                run["n_samples"], run["seed"], method=run["method"])
    run["output"].mkdir(parents=True, exist_ok=True)
    report.to_csv(run["output"] / "report_lower.csv")
    write_summary(run["output"] / "summary.json", [report])
    for row in report.rows:
        print(f"eps={row.epsilon:g} eps_log={row.eps_log_estimate:.4f} "
              f"threshold={row.threshold:.4f} pass={row.passed}")
    return 0 if report.all_pass else 1


def cmd_verify_upper(cfg, args):
    basis = cfgmod.build_basis(cfg)
    noise = cfgmod.build_noise(cfg)
    grid = cfgmod.build_grid(cfg)
    model = cfgmod.build_model(cfg, basis, noise)
    run = cfgmod.run_params(cfg)
    report = verify_upper_bound(run["x"], run["r"], run["delta"], run["gamma"],
                                run["eps_list"], model, basis, noise,
                                run["n_samples"], run["seed"], steps=grid.steps)
    run["output"].mkdir(parents=True, exist_ok=True)
    report.to_csv(run["output"] / "report_upper.csv")
    write_summary(run["output"] / "summary.json", [report])
    for row in report.rows:
        print(f"eps={row.epsilon:g} eps_log={row.eps_log_estimate:.4f} "
              f"threshold={row.threshold:.4f} pass={row.passed}")
    return 0 if report.all_pass else 1


def cmd_tails(cfg, args):
    basis = cfgmod.build_basis(cfg)
    noise = cfgmod.build_noise(cfg)
    run = cfgmod.run_params(cfg)
    delta_grid = cfg.get("tails.delta_grid", [1.0, 2.0, 3.0, 4.0])
    if not isinstance(delta_grid, list) or not delta_grid:
        raise ConfigValidationError("tails.delta_grid: must be a nonempty list")
    xi = np.asarray(cfg.get("tails.xi", np.eye(basis.dim_h, noise.dim_u)), dtype=float)
    eta1 = cfg.get("tails.eta1", 1.0)
    steps = cfg.get("tails.steps", 64)
    xi_path = np.broadcast_to(xi, (steps, basis.dim_h, noise.dim_u))
    mart_rows = chow_menaldi_check(xi_path, float(eta1), [float(d) for d in delta_grid],
                                   run["n_samples"], run["seed"], noise)
    alpha0 = float(cfg.get("tails.alpha0", 0.4))
    p0 = float(cfg.get("tails.p0", 1.5))
    eta2 = cfg.get("tails.eta2")
    if eta2 is None:
        eta2 = convolution_eta2(basis, xi, alpha0)
    params = TailBoundParams.from_basis(basis, alpha0, p0, float(eta2))
    conv_rows = peszat_tail_check(basis, xi, params, [float(d) for d in delta_grid],
                                  run["n_samples"], run["seed"] + 1, noise, steps=steps)

    rows = []
    for kind, src in (("martingale", mart_rows), ("convolution", conv_rows)):
        for r in src:
            rows.append(ReportRow(epsilon=r["delta"], estimate=r["empirical"],
                                  stderr=r["stderr"], eps_log_estimate=r["bound"],
                                  threshold=r["bound"], passed=r["pass"]))
    report = LDPReport(kind="tails", rows=rows, seed=run["seed"], config=dict(cfg))
    run["output"].mkdir(parents=True, exist_ok=True)
    report.to_csv(run["output"] / "report_tails.csv")
    write_summary(run["output"] / "summary.json", [report],
                  extra={"peszat_constant": params.c_const, "kappa": params.kappa,
                         "eta2": float(eta2)})
    for kind, src in (("martingale", mart_rows), ("convolution", conv_rows)):
        for r in src:
            print(f"{kind} delta={r['delta']:g} empirical={r['empirical']:.4g} "
                  f"bound={r['bound']:.4g} pass={r['pass']}")
    return 0 if report.all_pass else 1


def cmd_assumptions(cfg, args):
    basis = cfgmod.build_basis(cfg)
    noise = cfgmod.build_noise(cfg)
    model = cfgmod.build_model(cfg, basis, noise)
    run = cfgmod.run_params(cfg)
    r = float(cfg.get("assumptions.r", 1.0))
    a = float(cfg.get("assumptions.a", 0.25))
    meshes = cfg.get("assumptions.mesh", [0.2, 0.1, 0.05])
    tails = [check_a1_tail(model, r, n, seed=run["seed"])
             for n in range(noise.dim_u + 1)]
    moduli = [check_a2_modulus(basis, a, float(h)) for h in meshes]
    run["output"].mkdir(parents=True, exist_ok=True)
    payload = {"a1_tail_by_level": tails, "a2_modulus_by_mesh":
               {repr(float(h)): m for h, m in zip(meshes, moduli)}}
    (run["output"] / "assumptions.json").write_text(json.dumps(payload, indent=2))
    for n, v in enumerate(tails):
        print(f"A1 tail level {n}: {v:.6g}")
    for h, m in zip(meshes, moduli):
        print(f"A2 modulus mesh {h:g}: {m:.6g}")
    return 0


def cmd_report(cfg, args):
    run = cfgmod.run_params(cfg)
    out = run["output"]
    merged = {"reports": {}, "all_pass": True}
    found = False
    for name in ("report_lower.csv", "report_upper.csv", "report_tails.csv"):
        path = out / name
        if not path.is_file():
            continue
        found = True
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        passes = [r["pass"] == "true" for r in rows]
        merged["reports"][name] = {"rows": len(rows), "passes": sum(passes)}
        merged["all_pass"] = merged["all_pass"] and all(passes)
    if not found:
        raise ConfigValidationError(f"run.output: no report CSV files found in {out}")
    (out / "summary.json").write_text(json.dumps(merged, indent=2))
    print(json.dumps(merged, indent=2))
    return 0 if merged["all_pass"] else 1


COMMANDS = {
    "simulate": cmd_simulate,
    "skeleton": cmd_skeleton,
    "rate": cmd_rate,
    "verify-lower": cmd_verify_lower,
    "verify-upper": cmd_verify_upper,
    "tails": cmd_tails,
    "assumptions": cmd_assumptions,
    "report": cmd_report,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ldplab",
        description="Monte Carlo laboratory for small-time large-deviation "
                    "bounds of spectrally truncated stochastic evolution equations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="path to flat dotted-key config file")
        p.add_argument("--set", action="append", default=[], dest="overrides",
                       metavar="KEY=VALUE", help="override a config key")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load_config(args.config)
        cfg = cfgmod.apply_overrides(cfg, args.overrides)
        return COMMANDS[args.command](cfg, args)
    except ConfigParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except ConfigValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
