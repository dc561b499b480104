"""Command-line front end: generate, solve, validate, bench.

Exit codes: 0 success, 1 usage error, 2 infeasible model or failed
validation, 3 time limit reached without an incumbent.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backend import SolveStatus
from .generate import (
    PRESETS,
    SCENARIOS,
    BenchmarkSpec,
    apply_scenario,
    generate_benchmark,
    generate_realistic_base,
)
from .model import load_instance, save_instance
from .solve import (
    ADD_MODES,
    FORMULATIONS,
    SEP_MODES,
    SolveConfig,
    load_solution_elements,
    run_benchmark,
    solve,
    write_report,
)
from .validate import validate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_NO_INCUMBENT = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mdevsp", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    gen = sub.add_parser("generate", help="write instance files and a manifest")
    gen.add_argument("--family", choices=("benchmark", "realistic"), required=True)
    gen.add_argument("--trips", type=int, default=10)
    gen.add_argument("--depots", type=int, default=1)
    gen.add_argument("--stations", type=int, default=1)
    gen.add_argument("--tech", choices=sorted(PRESETS))
    gen.add_argument("--scenario", choices=SCENARIOS, default="standard")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--line-id", type=int, default=1, help="first line id (realistic)")
    gen.add_argument("--family-seed", type=int, default=0)
    gen.add_argument("--out-dir", default="instances")

    solve_p = sub.add_parser("solve", help="solve one instance and write a report")
    solve_p.add_argument("instance")
    solve_p.add_argument("--model", choices=FORMULATIONS, default="2i-cc")
    solve_p.add_argument("--sep", choices=SEP_MODES, default="i")
    solve_p.add_argument("--cuts", choices=ADD_MODES, default="all")
    solve_p.add_argument("--vi", action="store_true")
    solve_p.add_argument("--time-limit", type=float, default=600.0)
    solve_p.add_argument("--seed", type=int, default=0)
    solve_p.add_argument("--out", default=None)

    val = sub.add_parser("validate", help="check a solution report against its instance")
    val.add_argument("instance")
    val.add_argument("solution")
    val.add_argument("--out", default=None)

    bench = sub.add_parser("bench", help="run a batch of (instance, config) solves")
    bench.add_argument("--manifest", default=None, help="JSON with instances and configs")
    bench.add_argument("--instances", nargs="*", default=None)
    bench.add_argument("--model", choices=FORMULATIONS, default="2i-cc")
    bench.add_argument("--sep", choices=SEP_MODES, default="i")
    bench.add_argument("--cuts", choices=ADD_MODES, default="all")
    bench.add_argument("--vi", action="store_true")
    bench.add_argument("--time-limit", type=float, default=600.0)
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--out", default="results.csv")
    return parser


def _cmd_generate(args) -> int:
    if args.family == "benchmark":
        if args.tech is not None:
            raise UsageError("--tech applies to the realistic family only")
        if args.scenario != "standard":
            raise UsageError("--scenario applies to the realistic family only")
    else:
        if args.tech is None:
            raise UsageError("--tech is required for the realistic family")
        if args.scenario != "standard":
            if args.tech == "DB":
                raise UsageError(f"--tech DB --scenario {args.scenario}: diesel has no scenario variants")
            if args.scenario == "battery" and args.tech != "BEB":
                raise UsageError("--scenario battery applies to BEB only")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for i in range(args.count):
        if args.family == "benchmark":
            seed = args.seed + i
            spec = BenchmarkSpec(args.trips, args.depots, args.stations, seed)
            instance = generate_benchmark(spec)
            name = f"benchmark_t{args.trips}_k{args.depots}_c{args.stations}_s{seed}.json"
        else:
            line_id = args.line_id + i
            instance = generate_realistic_base(
                line_id, args.trips, args.tech, args.seed, family_seed=args.family_seed
            )
            if args.scenario != "standard":
                instance = apply_scenario(instance, args.scenario)
            name = f"realistic_{args.tech}_line{line_id}_t{args.trips}_s{args.seed}"
            if args.scenario != "standard":
                name += f"_{args.scenario}"
            name += ".json"
        path = out_dir / name
        save_instance(instance, path)
        files.append(str(path))
        print(f"wrote {path}")
    manifest = {"instances": files}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1))
    print(f"wrote {out_dir / 'manifest.json'}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    config = SolveConfig(
        formulation=args.model,
        sep_mode=args.sep,
        add_mode=args.cuts,
        vi=args.vi,
        time_limit=args.time_limit,
        seed=args.seed,
    )
    solution = solve(instance, config)
    out = args.out or str(Path(args.instance).with_suffix("")) + "_solution.json"
    write_report(solution, out)
    obj = solution.objective
    summary = "none" if obj is None else (
        f"buses={obj.n_vehicles} charges={obj.n_charges} deadhead={obj.deadhead_energy:.2f}"
    )
    print(
        f"{solution.config.setting_name} status={solution.status.value} {summary} "
        f"cuts={solution.stats.cuts_added} rounds={solution.stats.rounds} -> {out}"
    )
    if solution.status == SolveStatus.INFEASIBLE:
        return EXIT_INVALID
    if solution.status in (SolveStatus.TIME_LIMIT, SolveStatus.ERROR, SolveStatus.UNBOUNDED):
        return EXIT_NO_INCUMBENT
    return EXIT_OK


def _cmd_validate(args) -> int:
    instance = load_instance(args.instance)
    schedules = load_solution_elements(args.solution)
    report = validate(instance, schedules)
    doc = json.dumps(report.to_json_dict(), indent=1)
    if args.out:
        Path(args.out).write_text(doc)
    print(doc)
    return EXIT_OK if report.passed else EXIT_INVALID


def _cmd_bench(args) -> int:
    configs = [
        SolveConfig(
            formulation=args.model,
            sep_mode=args.sep,
            add_mode=args.cuts,
            vi=args.vi,
            time_limit=args.time_limit,
        )
    ]
    instances = list(args.instances or [])
    if args.manifest:
        doc = json.loads(Path(args.manifest).read_text())
        instances.extend(doc.get("instances", []))
        if doc.get("configs"):
            configs = [
                SolveConfig(
                    formulation=rec.get("model", "2i-cc"),
                    sep_mode=rec.get("sep", "i"),
                    add_mode=rec.get("cuts", "all"),
                    vi=bool(rec.get("vi", True)),
                    time_limit=float(rec.get("time_limit", args.time_limit)),
                )
                for rec in doc["configs"]
            ]
    if not instances:
        raise UsageError("no instances given (use --instances or --manifest)")
    rows = run_benchmark(instances, configs, args.out, workers=args.workers)
    print(f"wrote {len(rows)} result rows to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return EXIT_USAGE
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "bench":
            return _cmd_bench(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
