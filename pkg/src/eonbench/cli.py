"""Command-line front end.

Exit codes: 0 success, 1 I/O or input-file failure, 2 usage error,
3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path as FsPath

from . import bench
from .exact import SolverLimits, lower_bound, solve_rsa_exact, solve_rwa_exact
from .heuristics import CapacityExhaustedError, GaConfig, MsfConfig, ga_rwa_solve, msf_solve
from .lp import emit_lp
from .spectrum import (
    DEFAULT_RSA_SLOTS,
    DEFAULT_RWA_SLOTS,
    assignment_from_json,
    fitness,
    rsa_grid,
    rwa_grid,
    used_slice_count,
    validate_assignment,
)
from .topology import TopologyError, resolve_topology
from .traffic import TrafficError, generate_traffic, load_traffic, save_traffic, to_rwa_demands

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_INVALID = 0, 1, 2, 3


class InputError(Exception):
    pass


def _slice_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX, got {text!r}") from None
    if not 1 <= lo <= hi:
        raise argparse.ArgumentTypeError(f"invalid slice range {text!r}")
    return lo, hi


def _positive(kind):
    def parse(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return parse


def _read(path: str) -> str:
    try:
        return FsPath(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str, text: str) -> None:
    try:
        FsPath(path).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def _topology(spec: str):
    try:
        return resolve_topology(spec)
    except OSError as exc:
        raise InputError(f"cannot read topology {spec}: {exc.strerror}") from None
    except TopologyError as exc:
        raise InputError(f"bad topology {spec}: {exc}") from None


def _traffic(path: str, topo):
    try:
        return load_traffic(_read(path), topo)
    except (TrafficError, TopologyError) as exc:
        raise InputError(f"bad traffic file {path}: {exc}") from None


def _emit(args, human: str, data: dict) -> None:
    print(json.dumps(data, sort_keys=True) if args.json else human)


def cmd_gen(args) -> int:
    topo = _topology(args.topology)
    lo, hi = args.slices
    tm = generate_traffic(topo, args.demands, lo, hi, args.seed)
    _write(args.output, save_traffic(tm, topo))
    _emit(
        args,
        f"{len(tm)} demands, {tm.total_slices} slices total -> {args.output}",
        {"demands": len(tm), "total_slices": tm.total_slices, "output": args.output},
    )
    return EXIT_OK


def cmd_solve(args) -> int:
    topo = _topology(args.topology)
    tm = _traffic(args.traffic, topo)
    rwa = args.problem == "rwa"
    if rwa:
        tm = to_rwa_demands(tm)
    slots = args.slots or (DEFAULT_RWA_SLOTS if rwa else DEFAULT_RSA_SLOTS)
    grid = rwa_grid(slots) if rwa else rsa_grid(slots)
    t0 = time.perf_counter()
    outcome: dict = {"problem": args.problem, "method": args.method}
    solution = None
    if args.method == "exact":
        limits = SolverLimits(args.time_limit, args.node_limit, args.path_cap)
        result = solve_rwa_exact(topo, tm, limits, grid) if rwa else solve_rsa_exact(topo, tm, grid, limits)
        data = result.to_dict()
        data["stats"].pop("wall_time_s")
        outcome.update(data)
        solution = result.solution
    else:
        try:
            if args.method == "msf":
                solution = msf_solve(topo, tm, MsfConfig(args.k_paths or 3, grid))
            else:
                if not rwa:
                    raise ValueError("--method ga solves RWA only; use --problem rwa")
                cfg = GaConfig(
                    k_paths=args.k_paths or 10,
                    population=args.population,
                    generations=args.generations,
                    seed=args.seed,
                    grid=grid,
                )
                solution = ga_rwa_solve(topo, tm, cfg).assignment
            outcome.update(status="Heuristic", objective=used_slice_count(solution))
        except CapacityExhaustedError as exc:
            outcome.update(status="CapacityExhausted", objective=None, detail=str(exc))
        outcome["lower_bound"] = lower_bound(topo, tm)
    if solution is not None:
        outcome["fitness"] = fitness(solution)
    wall = time.perf_counter() - t0
    if solution is not None and args.output:
        _write(args.output, solution.to_json())
    if args.outcome:
        _write(args.outcome, json.dumps(outcome, indent=2, sort_keys=True))
    human = (
        f"status {outcome['status']}, objective {outcome.get('objective')}, "
        f"bound {outcome['lower_bound']}, wall {wall:.3f}s"
    )
    _emit(args, human, {**outcome, "wall_time_s": round(wall, 6)})
    return EXIT_OK


def cmd_validate(args) -> int:
    topo = _topology(args.topology)
    tm = _traffic(args.traffic, topo)
    if args.problem == "rwa":
        tm = to_rwa_demands(tm)
    try:
        assignment = assignment_from_json(_read(args.solution), topo, tm)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"bad solution file {args.solution}: {exc}") from None
    violations = validate_assignment(topo, tm, assignment)
    lines = [f"{v.kind} demand={v.demand} {v.detail}".rstrip() for v in violations]
    human = "\n".join(lines + [f"{len(violations)} violations"])
    _emit(
        args,
        human,
        {
            "violations": [vars(v) for v in violations],
            "count": len(violations),
            "used_slices": used_slice_count(assignment),
            "fitness": fitness(assignment),
        },
    )
    return EXIT_INVALID if violations else EXIT_OK


def cmd_emit_lp(args) -> int:
    topo = _topology(args.topology)
    tm = _traffic(args.traffic, topo)
    grid = rsa_grid(args.slots or DEFAULT_RSA_SLOTS)
    text = emit_lp(topo, tm, grid)
    _write(args.output, text)
    header = [line[2:] for line in text.splitlines() if line.startswith("\\ ")]
    _emit(args, "\n".join(header), {"header": header, "output": args.output})
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.config:
        try:
            cfg = bench.ExperimentConfig.from_json(_read(args.config))
        except (ValueError, TypeError) as exc:
            raise InputError(f"bad config {args.config}: {exc}") from None
    else:
        cfg = bench.default_config("small" if args.experiment == "small" else "audit")
    overrides = {}
    if args.instances:
        overrides["instance_count"] = args.instances
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.threads:
        overrides["threads"] = args.threads
    if args.node_limit:
        overrides["limits"] = replace(cfg.limits, node_limit=args.node_limit)
    cfg = replace(cfg, **overrides)
    report = bench.EXPERIMENTS[args.experiment](cfg)
    out = FsPath(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create {out}: {exc.strerror}") from None
    _write(str(out / f"{args.experiment}.csv"), report.to_csv())
    _write(str(out / f"{args.experiment}.md"), report.to_markdown())
    _write(str(out / f"{args.experiment}.config.json"), cfg.to_json())
    human = report.to_markdown() + "".join(f"VIOLATION {v}\n" for v in report.violations)
    agg = report.aggregates
    _emit(
        args,
        human.rstrip(),
        {
            "experiment": args.experiment,
            "rsa_mean_gap": float(agg["rsa"]["mean_gap"]) if agg["rsa"]["mean_gap"] is not None else None,
            "rwa_mean_gap": float(agg["rwa"]["mean_gap"]) if agg["rwa"]["mean_gap"] is not None else None,
            "negative_heuristic_savings": agg["negative_heuristic_savings"],
            "violations": report.violations,
        },
    )
    return EXIT_INVALID if report.violations else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--threads", type=_positive(int), default=None,
                        help="parallelism hint; never changes reported values")

    p = argparse.ArgumentParser(prog="eonbench", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a traffic matrix")
    g.add_argument("--topology", required=True, help="builtin name or topology JSON path")
    g.add_argument("--demands", type=_positive(int), required=True)
    g.add_argument("--slices", type=_slice_range, default=(1, 4), help="MIN:MAX slices per demand")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", parents=[common], help="solve RSA or RWA")
    s.add_argument("--topology", required=True)
    s.add_argument("--traffic", required=True)
    s.add_argument("--problem", choices=("rsa", "rwa"), required=True)
    s.add_argument("--method", choices=("exact", "msf", "ga"), required=True)
    s.add_argument("--slots", type=_positive(int))
    s.add_argument("--time-limit", type=_positive(float), default=60.0)
    s.add_argument("--node-limit", type=_positive(int), default=1_000_000)
    s.add_argument("--path-cap", type=_positive(int), default=64)
    s.add_argument("--k-paths", type=_positive(int))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--population", type=_positive(int), default=50)
    s.add_argument("--generations", type=int, default=200)
    s.add_argument("-o", "--output", help="assignment JSON")
    s.add_argument("--outcome", help="outcome JSON")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", parents=[common], help="check an assignment")
    v.add_argument("--topology", required=True)
    v.add_argument("--traffic", required=True)
    v.add_argument("--solution", required=True)
    v.add_argument("--problem", choices=("rsa", "rwa"), default="rsa")
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("emit-lp", parents=[common], help="write the RSA model in LP format")
    e.add_argument("--topology", required=True)
    e.add_argument("--traffic", required=True)
    e.add_argument("--slots", type=_positive(int))
    e.add_argument("-o", "--output", required=True)
    e.set_defaults(func=cmd_emit_lp)

    b = sub.add_parser("bench", parents=[common], help="run an experiment")
    b.add_argument("--experiment", choices=tuple(bench.EXPERIMENTS), required=True)
    b.add_argument("--config", help="experiment config JSON (default: shipped config)")
    b.add_argument("--instances", type=_positive(int))
    b.add_argument("--seed", type=int, help="base seed override")
    b.add_argument("--node-limit", type=_positive(int))
    b.add_argument("--out-dir", default=".")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
