"""Command-line surface: generate, validate, solve, evaluate, report.

Exit codes: 0 success, 1 domain error (infeasible input, schema violation),
2 usage error. Data goes to files; status and diagnostics go to stderr; only
`report` prints to stdout.
"""

import argparse
import sys
from pathlib import Path

from . import fileio, plotting
from .core import SvrpError
from .evaluation import BenchmarkItem, aggregate_metrics, evaluate_solution
from .generator import GeneratorConfig, generate_instance, tier_config, validate_instance
from .solvers import SOLVERS, build_planning_matrix, external_solve


def _cmd_generate(args, parser) -> int:
    if args.config is not None:
        config = fileio.read_generator_config(args.config)
        if args.seed is not None:
            from dataclasses import replace
            config = replace(config, seed=args.seed)
    else:
        if args.n is None:
            parser.error("generate needs --n or --config")
        seed = args.seed if args.seed is not None else 0
        if args.tier is not None:
            config = tier_config(args.tier, args.n, seed=seed,
                                 problem_type=args.type, depot_config=args.depots)
        else:
            config = GeneratorConfig(n_customers=args.n, problem_type=args.type,
                                     depot_config=args.depots, seed=seed,
                                     num_vehicles=args.vehicles,
                                     max_demand=args.max_demand, extent=args.extent)
    instance = generate_instance(config)
    fileio.write_instance(instance, args.out)
    print(f"generated {instance.id}: {instance.num_customers} customers, "
          f"{instance.num_depots} depots -> {args.out}", file=sys.stderr)
    return 0


def _cmd_validate(args, parser) -> int:
    instance = fileio.read_instance(args.infile)
    verdict = validate_instance(instance)
    if not verdict.feasible:
        print(f"infeasible: {verdict.reason}", file=sys.stderr)
        return 1
    print(f"{instance.id}: feasible", file=sys.stderr)
    return 0


def _cmd_solve(args, parser) -> int:
    instance = fileio.read_instance(args.infile)
    verdict = validate_instance(instance)
    if not verdict.feasible:
        print(f"infeasible instance: {verdict.reason}", file=sys.stderr)
        return 1
    if args.solver == "external":
        if not args.command:
            parser.error("--solver external needs --command")
        solution = external_solve(instance, args.command)
    else:
        matrix = build_planning_matrix(instance)
        solution = SOLVERS[args.solver](instance, matrix, seed=args.seed)
    fileio.write_solution(solution, instance.id, args.out)
    print(f"solved {instance.id} with {solution.solver_name}: "
          f"{len(solution.routes)} routes in {solution.wall_time:.3f}s -> {args.out}",
          file=sys.stderr)
    return 0


def _collect(directory, reader, kind):
    paths = sorted(Path(directory).glob("*.json"))
    out = []
    for path in paths:
        try:
            out.append((path, reader(path)))
        except SvrpError as exc:
            raise SvrpError(f"{path}: {exc}") from exc
    if not out:
        raise SvrpError(f"no {kind} files found in {directory}")
    return out


def _cmd_evaluate(args, parser) -> int:
    instances = {}
    for path, instance in _collect(args.instances, fileio.read_instance, "instance"):
        instances[instance.id] = instance
    items = []
    for path, record in _collect(args.solutions, fileio.read_solution, "solution"):
        instance = instances.get(record.instance_id)
        if instance is None:
            raise SvrpError(f"{path}: no instance with id {record.instance_id!r} "
                            f"in {args.instances}")
        record.solution.validate(instance)
        results = evaluate_solution(record.solution, instance,
                                    args.realizations, args.seed)
        items.append(BenchmarkItem(record.solution.solver_name, instance.id,
                                   record.solution, tuple(results),
                                   record.solution.wall_time))
    reports = aggregate_metrics(items, instances.values())
    report_path = Path(args.report)
    fileio.write_report(reports, report_path, args.realizations, args.seed)
    csv_path = report_path.with_suffix(".csv")
    fileio.write_report_csv(reports, csv_path)
    written = [report_path, csv_path]
    if not args.no_figures:
        written += plotting.render_report_figures(reports, report_path.parent,
                                                  stem=report_path.stem)
    for path in written:
        print(f"wrote {path}", file=sys.stderr)
    return 0


def _cmd_report(args, parser) -> int:
    reports, meta = fileio.read_report(args.infile)
    if args.format == "json":
        sys.stdout.write(fileio.serialize_report(
            reports, meta["n_realizations"], meta["seed"]).decode("utf-8"))
    else:
        rows = [list(fileio.REPORT_COLUMNS)] + fileio.report_rows(reports)
        widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
        for r, row in enumerate(rows):
            print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
            if r == 0:
                print("  ".join("-" * w for w in widths))
        print(f"({meta['n_realizations']} realizations, seed {meta['seed']})")
    if args.figures is not None:
        for path in plotting.render_report_figures(reports, args.figures,
                                                   stem=Path(args.infile).stem):
            print(f"wrote {path}", file=sys.stderr)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svrp",
        description="Stochastic vehicle routing: generate instances, plan routes, "
                    "evaluate under repeated realizations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a seeded instance file")
    p.add_argument("--n", type=int, help="number of customers")
    p.add_argument("--type", choices=("cvrp", "twvrp"), default="cvrp")
    p.add_argument("--depots", choices=("single", "multi_random", "depots_equal_city"),
                   default="single")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--vehicles", type=int, default=None)
    p.add_argument("--max-demand", type=int, default=10)
    p.add_argument("--extent", type=float, default=100.0)
    p.add_argument("--tier", choices=("small", "medium", "large"), default=None)
    p.add_argument("--config", default=None, help="generator config JSON file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("validate", help="check an instance file for fleet feasibility")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("solve", help="plan routes for an instance file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--solver", choices=("nn2opt", "tabu", "aco", "external"),
                   default="nn2opt")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--command", default=None,
                   help="external solver command; gets instance and solution paths")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("evaluate",
                       help="evaluate solution files under stochastic realizations")
    p.add_argument("--instances", required=True, help="directory of instance files")
    p.add_argument("--solutions", required=True, help="directory of solution files")
    p.add_argument("--realizations", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", required=True, help="report JSON path; CSV and "
                   "figures are written alongside")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="pretty-print a report file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--figures", default=None, help="also render figures to this directory")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except SvrpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
