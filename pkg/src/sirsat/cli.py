"""Command-line front end.

    sirsat <command> --config <path> [--out <prefix>] [--strategy ...] [--grid-n N]

Commands: simulate, equilibria, scan, optimize, efficiency. Exit status is 0
on success, 1 on bad input, 2 on numerical failure and 3 when the
forward-backward sweep did not converge (artifacts are still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import equilibria as eq
from .config import ConfigError, RunConfig, load_config
from .numerics import IntegrationError, TimeGrid, Trajectory
from .optctl import (STRATEGY_CHANNELS, FbsDivergenceError, cumulative_infected,
                     run_strategy, simulate)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_NONCONVERGED = 0, 1, 2, 3
COMMANDS = ("simulate", "equilibria", "scan", "optimize", "efficiency")

log = logging.getLogger("sirsat")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_json(path: Path, payload) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def trajectory_rows(traj: Trajectory, *extra: np.ndarray):
    cols = [traj.times] + [traj.column(i) for i in range(traj.samples.shape[1])] + list(extra)
    return zip(*cols)


def _complex(z: complex) -> list[float]:
    return [z.real, z.imag]


def _point(pt: eq.EquilibriumPoint) -> dict:
    return {"S": pt.state.S, "I": pt.state.I, "R": pt.state.R,
            "kind": pt.kind.value, "stability": pt.stability.value}


# ---------------------------------------------------------------------------
# Commands


def cmd_simulate(cfg: RunConfig, prefix: Path) -> int:
    traj = simulate(cfg.params, cfg.initial, cfg.grid, cfg.controls.u1, cfg.controls.u2)
    out = write_csv(Path(f"{prefix}_trajectory.csv"), ["t", "S", "I", "R"], trajectory_rows(traj))
    S, I, R = traj.samples[-1]
    print(f"cumulative infected: {cumulative_infected(traj):.6g}")
    print(f"final state: S={S:.6g} I={I:.6g} R={R:.6g}")
    print(f"wrote {out}")
    return EXIT_OK


def equilibria_report(cfg: RunConfig) -> dict:
    p, u = cfg.params, cfg.controls
    dfe = eq.disease_free_equilibrium(p, u.u1)
    dstab = eq.dfe_stability(p, u)
    coef = eq.endemic_coefficients(p, u)
    holds, margin = eq.backward_bifurcation_condition(p, u.u2)
    try:
        slope = eq.slope_dI_dR0_at_one(p, u.u2)
    except ZeroDivisionError:
        slope = None
    u2_0 = eq.transcritical_u2_threshold(p, u.u1) if p.r > 0 else None
    return {
        "r0": dstab.r0,
        "disease_free": {
            "S": dfe.S, "I": dfe.I, "R": dfe.R,
            "stability": dstab.stability.value,
            "centre_manifold_a11": dstab.a11,
            "dulac_condition": dstab.globally_attracting,
            "eigenvalues": [_complex(z) for z in dstab.eigenvalues],
        },
        "endemic_coefficients": {"c1": coef.c1, "c2": coef.c2, "c3": coef.c3,
                                 "discriminant": coef.discriminant},
        "endemic": [_point(pt) for pt in eq.endemic_equilibria(p, u)],
        "backward_bifurcation": {"holds": holds, "margin": margin,
                                 "slope_dI_dR0": slope,
                                 "r0_star": eq.find_r0_star(p, u)},
        "transcritical_u2": None if u2_0 is None else {"u2": u2_0.u2,
                                                        "admissible": u2_0.admissible},
        "endemic_sufficient_condition": eq.sufficient_stability_condition(p, u.u2),
    }


def cmd_equilibria(cfg: RunConfig, prefix: Path) -> int:
    report = equilibria_report(cfg)
    out = write_json(Path(f"{prefix}_equilibria.json"), report)
    print(f"R0 = {report['r0']:.6g}; DFE {report['disease_free']['stability']}; "
          f"{len(report['endemic'])} endemic equilibria")
    for pt in report["endemic"]:
        print(f"  I* = {pt['I']:.6g} ({pt['stability']})")
    print(f"wrote {out}")
    return EXIT_OK


DEFAULT_R0_GRID = tuple(float(v) for v in np.linspace(0.5, 1.5, 101))


def cmd_scan(cfg: RunConfig, prefix: Path, r0_grid=None) -> int:
    grid = r0_grid or cfg.r0_grid or DEFAULT_R0_GRID
    samples = eq.bifurcation_scan(cfg.params, cfg.controls, grid)
    rows = []
    for s in samples:
        slots = [(pt.state.I, pt.stability.value) for pt in s.points] + [(None, None)] * 2
        rows.append([s.r0, s.beta, len(s.points), *slots[0], *slots[1]])
    out = write_csv(Path(f"{prefix}_scan.csv"),
                    ["r0", "beta", "count", "I_1", "stability_1", "I_2", "stability_2"], rows)
    r0_star = eq.find_r0_star(cfg.params, cfg.controls)
    print(f"{len(samples)} grid points; R0* = {r0_star if r0_star is not None else 'n/a'}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, prefix: Path) -> int:
    rep = run_strategy(cfg.strategy, cfg.params, cfg.weights, cfg.initial, cfg.grid, cfg.oc_options)
    sol = rep.solution
    t = sol.grid.times
    write_csv(Path(f"{prefix}_controls.csv"), ["t", "u1", "u2"], zip(t, sol.u1, sol.u2))
    write_csv(Path(f"{prefix}_states.csv"), ["t", "S", "I", "R"], trajectory_rows(sol.states))
    write_csv(Path(f"{prefix}_baseline.csv"), ["t", "S", "I", "R"], trajectory_rows(rep.baseline))
    write_csv(Path(f"{prefix}_adjoints.csv"), ["t", "lambda1", "lambda2", "lambda3"],
              trajectory_rows(sol.adjoints))
    out = write_json(Path(f"{prefix}_optimize.json"), {
        "strategy": rep.strategy,
        "objective": sol.objective,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "cumulative_infected": rep.cumulative_infected,
        "baseline_cumulative_infected": rep.baseline_cumulative_infected,
        "efficiency_index": rep.efficiency_index,
    })
    print(f"strategy {rep.strategy}: J = {sol.objective:.6g}, "
          f"{sol.iterations} sweeps, converged={sol.converged}")
    print(f"wrote {out} and control/state/baseline/adjoint CSVs")
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def cmd_efficiency(cfg: RunConfig, prefix: Path) -> int:
    reports = [run_strategy(s, cfg.params, cfg.weights, cfg.initial, cfg.grid, cfg.oc_options)
               for s in ("str1", "str2")]
    a_o = reports[0].baseline_cumulative_infected
    rows = [{"strategy": r.strategy, "cumulative_infected": r.cumulative_infected,
             "efficiency_index": r.efficiency_index, "objective": r.solution.objective,
             "converged": r.solution.converged} for r in reports]
    best = max(rows, key=lambda r: r["efficiency_index"])["strategy"]
    write_csv(Path(f"{prefix}_efficiency.csv"), ["strategy", "cumulative_infected", "efficiency_index"],
              [[r["strategy"], r["cumulative_infected"], r["efficiency_index"]] for r in rows])
    out = write_json(Path(f"{prefix}_efficiency.json"), {
        "baseline_cumulative_infected": a_o, "strategies": rows, "best": best})

    print(f"A^o (no control) = {a_o:.6g}")
    print(f"{'strategy':<10}{'A^c':>14}{'E.I. (%)':>12}")
    for r in rows:
        print(f"{r['strategy']:<10}{r['cumulative_infected']:>14.6g}{r['efficiency_index']:>12.4g}")
    print(f"best: {best}")
    print(f"wrote {out}")
    converged = all(r["converged"] for r in rows)
    return EXIT_OK if converged else EXIT_NONCONVERGED


# ---------------------------------------------------------------------------


def _parse_r0_grid(text: str) -> tuple[float, ...]:
    try:
        start, stop, num = text.split(":")
        values = np.linspace(float(start), float(stop), int(num))
    except ValueError:
        raise argparse.ArgumentTypeError("expected start:stop:num, e.g. 0.9:1.2:31") from None
    if len(values) == 0 or np.any(values <= 0):
        raise argparse.ArgumentTypeError("R0 grid values must be positive")
    return tuple(float(v) for v in values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sirsat",
        description="SIR model with saturated incidence and treatment: "
                    "equilibria, bifurcations and optimal control.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True,
                        help="JSON config file (bundled: table2.json, figure1.json)")
    parser.add_argument("--out", help="output path prefix (overrides config 'output')")
    parser.add_argument("--strategy", choices=sorted(STRATEGY_CHANNELS),
                        help="control strategy for 'optimize'")
    parser.add_argument("--grid-n", type=int, help="number of time steps (even)")
    parser.add_argument("--r0-grid", type=_parse_r0_grid, metavar="START:STOP:NUM",
                        help="R0 values for 'scan'")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def dispatch(command: str, cfg: RunConfig, prefix=None, r0_grid=None) -> int:
    prefix = Path(prefix or cfg.output)
    if command == "simulate":
        return cmd_simulate(cfg, prefix)
    if command == "equilibria":
        return cmd_equilibria(cfg, prefix)
    if command == "scan":
        return cmd_scan(cfg, prefix, r0_grid)
    if command == "optimize":
        return cmd_optimize(cfg, prefix)
    if command == "efficiency":
        return cmd_efficiency(cfg, prefix)
    raise ValueError(f"unknown command {command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.grid_n is not None:
            cfg = replace(cfg, grid=TimeGrid(cfg.grid.t0, cfg.grid.t1, args.grid_n))
        if args.strategy is not None:
            cfg = replace(cfg, strategy=args.strategy)
        return dispatch(args.command, cfg, args.out, args.r0_grid)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IntegrationError, FbsDivergenceError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
