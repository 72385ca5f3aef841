"""Command-line front end: run dynamics, bound steady states, generate instances.

Exit codes are a stable scripting contract: 0 on success, 2 for bad input
(unreadable/invalid instance files, bad flags), 3 when a solver or integrator
fails numerically.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .bounds import SUBSET_BUDGET, compute_bounds
from .dynamics import DYNAMICS, IntegratorConfig, Trajectory, simulate
from .hills import partition_dot
from .instances import InstanceError, generate_instance, load_instance, save_instance
from .model import NumericalFailure, is_nash, social_utility
from .reduction import reduction_dot

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

NASH_TOL = 1e-4  # density slack for the summary's equilibrium verdict

_DEFAULTS = IntegratorConfig()


def _write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    n = traj.states.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x_{i + 1}" for i in range(n)] + ["U"])
        for t, row, u in zip(traj.times, traj.states, traj.utilities):
            writer.writerow(
                [f"{t:.10g}"] + [f"{v:.17g}" for v in row] + [f"{u:.17g}"]
            )


def cmd_simulate(args) -> int:
    inst = load_instance(args.instance)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.instance).stem
    config = IntegratorConfig(h=args.step, eq_tol=args.eq_tol, t_max=args.tmax)

    summary = {
        "instance": str(args.instance),
        "rho": inst.state.rho,
        "step": config.h,
        "t_max": config.t_max,
        "eq_tol": config.eq_tol,
        "dynamics": {},
    }
    for dyn in DYNAMICS if args.dynamics == "all" else (args.dynamics,):
        traj = simulate(inst.graph, inst.payoffs, inst.state, dyn, config)
        csv_path = out_dir / f"{stem}.{dyn}.csv"
        _write_trajectory_csv(csv_path, traj)
        final = traj.final
        u_bar = social_utility(final, inst.payoffs)
        verdict = is_nash(final, inst.graph, inst.payoffs, NASH_TOL,
                          support_eps=5.0 * config.eq_tol / NASH_TOL)
        summary["dynamics"][dyn] = {
            "converged": traj.converged,
            "t_final": traj.diagnostics["t_final"],
            "steps": traj.diagnostics["steps"],
            "backend": traj.diagnostics["backend"],
            "U_bar": u_bar,
            "is_nash": verdict,
            "x_bar": [float(v) for v in final.x],
            "trajectory": csv_path.name,
        }
        print(
            f"{dyn}: U={u_bar:.6g} converged={traj.converged} "
            f"nash={verdict} t={traj.diagnostics['t_final']:.6g}"
        )
    (out_dir / f"{stem}.summary.json").write_text(
        json.dumps(summary, indent=2) + "\n"
    )
    return EXIT_OK


def cmd_bounds(args) -> int:
    inst = load_instance(args.instance)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.instance).stem

    report = compute_bounds(
        inst.graph, inst.state.x, inst.payoffs, enum_budget=args.enum_budget
    )
    (out_dir / f"{stem}.bounds.json").write_text(
        json.dumps(report.to_json_dict(), indent=2) + "\n"
    )
    (out_dir / f"{stem}.icrg.dot").write_text(reduction_dot(report.reduced))
    (out_dir / f"{stem}.partition.dot").write_text(
        partition_dot(report.partition, report.reduced)
    )
    print(f"u_min={report.u_min:.6g} u_max={report.u_max:.6g}")
    return EXIT_OK


def cmd_generate(args) -> int:
    inst = generate_instance(args.seed, args.nodes)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    save_instance(inst, out)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="popnet",
        description="Population dynamics on choice networks: simulation and "
        "steady-state utility bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate one or all dynamics")
    sim.add_argument("--instance", required=True, help="instance JSON file")
    sim.add_argument(
        "--dynamics",
        default="all",
        choices=DYNAMICS + ("all",),
        help="which dynamic to run (default: all)",
    )
    sim.add_argument("--step", type=float, default=_DEFAULTS.h, help="RK4 step size")
    sim.add_argument("--tmax", type=float, default=_DEFAULTS.t_max, help="time horizon")
    sim.add_argument(
        "--eq-tol",
        type=float,
        default=_DEFAULTS.eq_tol,
        help="velocity threshold for the steady-state detector",
    )
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(func=cmd_simulate)

    bnd = sub.add_parser("bounds", help="certified steady-state utility bounds")
    bnd.add_argument("--instance", required=True, help="instance JSON file")
    bnd.add_argument("--out", required=True, help="output directory")
    bnd.add_argument(
        "--enum-budget",
        type=int,
        default=SUBSET_BUDGET,
        help="max constraint subsets for exact vertex enumeration",
    )
    bnd.set_defaults(func=cmd_bounds)

    gen = sub.add_parser("generate", help="write a pseudo-random instance")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--nodes", type=int, required=True)
    gen.add_argument("--out", required=True, help="output JSON file")
    gen.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
