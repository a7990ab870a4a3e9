"""Command-line entry point: ``privgame mechanism ...`` and ``privgame experiment ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import io
from .attack import optimal_attack_value
from .errors import PrivgameError
from .geo import Grid, grid_metrics, prior_from_trace, read_traces, synthetic_users, write_traces
from .harness import APPROX_GRID, DEFAULT_GRID, EXPERIMENTS, ExperimentConfig, medians_by, parse_ladder
from .lp import write_lp
from .lp.solver import METHODS, SolverOptions
from .mechanism import KINDS, ApproxOptions, build_program

log = logging.getLogger("privgame")

_OBJECTIVES = {"avg": "average", "worst": "worst"}


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise SystemExit(f"{args.kind} needs {', '.join(missing)}")


def cmd_mechanism(args) -> int:
    prior = io.load_prior(args.prior)
    metrics = io.load_metrics(args.metrics)
    need = {"distortion": ("dm",), "differential": ("eps",), "differential-thresh": ("eps", "deps"),
            "joint": ("dm", "eps"), "dmax": ()}[args.kind]
    _need(args, *need)
    approx = ApproxOptions(radius_disting=args.prune_eps, radius_support=args.prune_support)
    prog = build_program(args.kind, prior, metrics, d_m=args.dm, eps_m=args.eps, d_eps_m=args.deps,
                         objective=_OBJECTIVES[args.objective], approx=approx)
    if args.dump_lp:
        write_lp(prog.lp, args.dump_lp)
    solved = prog.solve(SolverOptions(method=args.method))
    report = {"kind": args.kind, "value": solved.value,
              "privacy": optimal_attack_value(prior, solved.mechanism, metrics),
              "approximate": solved.approximate, "seconds": round(solved.solve_seconds, 6)}
    if args.kind == "dmax":
        report["d_m_max"] = solved.value
    print(json.dumps(report))
    if args.out:
        io.save_mechanism(solved.mechanism, args.out)
    return 0


def cmd_experiment(args) -> int:
    if args.grid:
        grid = Grid.load(args.grid)
    else:
        grid = APPROX_GRID if args.name == "approx" else DEFAULT_GRID
    cfg = ExperimentConfig(grid=grid, users=args.users, seed=args.seed, trace_length=args.trace_length,
                           smoothing=args.smoothing, objective=_OBJECTIVES[args.objective])
    kw = {}
    if args.eps_ladder:
        ladder = parse_ladder(args.eps_ladder)
        if args.name == "approx":
            if len(ladder) != 1:
                raise SystemExit("approx takes a single --eps-ladder value")
            kw["eps"] = ladder[0]
        else:
            kw["eps_ladder"] = ladder
    if args.dm_ladder:
        ladder = parse_ladder(args.dm_ladder)
        if args.name == "scenario3":
            kw["dm_ladder"] = ladder
        elif args.name == "scenario2":
            kw["offsets"] = ladder
        elif args.name == "approx" and len(ladder) == 1:
            kw["dm"] = ladder[0]
        else:
            raise SystemExit(f"--dm-ladder does not apply to {args.name}")
    if args.radii:
        if args.name != "approx":
            raise SystemExit("--radii applies to approx only")
        kw["radii"] = parse_ladder(args.radii)
    result = EXPERIMENTS[args.name](cfg, **kw)
    if args.out:
        result.write(args.out)
    bad = [r for r in result.rows if r.get("status") != "ok"]
    print(f"{args.name}: {len(result.rows)} rows, {len(bad)} not ok" + (f" -> {args.out}" if args.out else ""))
    if args.name == "approx":
        for r, e in medians_by(result, "radius", "error"):
            print(f"  radius {r:.3f}  median error {e:.6f}")
    return 0


def cmd_grid(args) -> int:
    grid = Grid(args.nx, args.ny, args.width, args.height)
    if args.out:
        grid.save(args.out)
    if args.metrics:
        io.save_metrics(grid_metrics(grid), args.metrics)
    print(json.dumps({**grid.to_dict(), "cells": grid.n_cells, "diameter_km": grid.diameter}))
    return 0


def cmd_traces(args) -> int:
    grid = Grid.load(args.grid)
    write_traces(args.out, synthetic_users(grid, args.users, args.seed, length=args.length))
    return 0


def cmd_prior(args) -> int:
    grid = Grid.load(args.grid)
    traces = read_traces(args.traces, grid)
    if args.user not in traces:
        raise SystemExit(f"no user {args.user!r} in {args.traces}")
    io.save_prior(prior_from_trace(traces[args.user], grid, args.smoothing), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="privgame", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mechanism", help="solve one mechanism LP")
    m.add_argument("kind", choices=KINDS)
    m.add_argument("--prior", required=True, help="prior JSON")
    m.add_argument("--metrics", required=True, help="metrics JSON")
    m.add_argument("--dm", type=float, help="distortion threshold d_m")
    m.add_argument("--eps", type=float, help="differential budget eps_m")
    m.add_argument("--deps", type=float, help="distinguishability threshold for differential-thresh")
    m.add_argument("--objective", choices=sorted(_OBJECTIVES), default="avg")
    m.add_argument("--prune-eps", type=float, help="drop ratio constraints beyond this distinguishability")
    m.add_argument("--prune-support", type=float, help="zero p(o|s) beyond this ground distance")
    m.add_argument("--method", choices=METHODS, default="auto")
    m.add_argument("--out", help="mechanism JSON")
    m.add_argument("--dump-lp", help="write the program in LP file format")
    m.set_defaults(func=cmd_mechanism)

    e = sub.add_parser("experiment", help="run a grid-world experiment and write CSV")
    e.add_argument("name", choices=sorted(EXPERIMENTS))
    e.add_argument("--grid", help="grid JSON (default 8x6 over 6x4 km; 6x6 over 4.5x4.5 km for approx)")
    e.add_argument("--users", type=int, default=10)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--eps-ladder", help="a:b:step or comma list (approx: one value)")
    e.add_argument("--dm-ladder", help="a:b:step in km (scenario2: offsets; approx: one value)")
    e.add_argument("--radii", help="approx pruning radii, a:b:step")
    e.add_argument("--trace-length", type=int, default=2000)
    e.add_argument("--smoothing", type=float, default=0.0)
    e.add_argument("--objective", choices=sorted(_OBJECTIVES), default="avg")
    e.add_argument("--out", help="result CSV")
    e.set_defaults(func=cmd_experiment)

    g = sub.add_parser("grid", help="write a grid JSON and its metrics")
    g.add_argument("nx", type=int)
    g.add_argument("ny", type=int)
    g.add_argument("width", type=float, help="km")
    g.add_argument("height", type=float, help="km")
    g.add_argument("--out", help="grid JSON")
    g.add_argument("--metrics", help="metrics JSON")
    g.set_defaults(func=cmd_grid)

    t = sub.add_parser("traces", help="write synthetic traces as CSV")
    t.add_argument("--grid", required=True)
    t.add_argument("--users", type=int, default=10)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--length", type=int, default=2000)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_traces)

    q = sub.add_parser("prior", help="estimate one user's prior from a trace CSV")
    q.add_argument("--grid", required=True)
    q.add_argument("--traces", required=True)
    q.add_argument("--user", required=True)
    q.add_argument("--smoothing", type=float, default=0.0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_prior)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PrivgameError, ValueError, OSError) as exc:
        print(f"privgame: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
