"""Command-line entry points: ``solve``, ``bench`` and ``profile``.

Exit status is 0 on a clean run, 1 for bad input (unreadable files, malformed
TOML or CSV, out-of-range options) and 2 when a solve ends in a fault.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .driver import Problem, SolverConfig, solve
from .errors import ContractViolation
from .problems import h_table, load_problem, problem_from_table, read_toml

EXIT_OK, EXIT_INPUT, EXIT_FAULT = 0, 1, 2


class InputError(Exception):
    """Bad command-line input; reported on stderr with exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", choices=["msg1", "msg2"], default="msg2")
    p.add_argument("--budget", type=int, help="F evaluations (default 1000 (n + 1))")
    p.add_argument("--delta0", type=float, help="initial radius (default 0.1 max(1, |x0|_inf))")
    p.add_argument("--sigma", type=float, default=1e-8, help="near-activity tolerance")
    p.add_argument("--eta1", type=float, default=0.01)
    p.add_argument("--eta2", type=float, default=1e4)


def config_from_args(args, **extra) -> SolverConfig:
    fields = {"variant": args.variant, "budget": args.budget, "delta0": args.delta0,
              "sigma": args.sigma, "eta1": args.eta1, "eta2": args.eta2}
    fields.update(extra)
    try:
        return SolverConfig(**fields)
    except ContractViolation as exc:
        raise InputError(str(exc)) from exc


def problem_from_args(args) -> tuple[Problem, dict]:
    """Build the problem and a description of its source for the summary."""
    from .bench.instances import generate_instance
    from .bench.registry import get_map

    if args.problem:
        if args.map or args.h or args.instance is not None:
            raise InputError("--problem cannot be combined with --map, --h or --instance")
        return load_problem(args.problem), {"problem": str(args.problem)}
    if not args.map:
        raise InputError("give --problem FILE, or --map NAME with --h FILE or --instance L")
    if (args.h is None) == (args.instance is None):
        raise InputError("--map needs exactly one of --h FILE and --instance L")
    if args.h is not None:
        return problem_from_table({}, args.map, h_table(read_toml(args.h))), {
            "map": args.map, "h": str(args.h)}
    rmap = get_map(args.map)
    spec = generate_instance(rmap.fun, rmap.x0, args.instance, args.seed)
    prob = problem_from_table({}, args.map, spec.as_h_table())
    return prob, {"map": args.map, "instance": args.instance, "seed": args.seed}


def cmd_solve(args) -> int:
    prob, source = problem_from_args(args)
    config = config_from_args(args)
    outcome = solve(prob, config)
    summary = {"source": source, "variant": config.variant, **outcome.summary()}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = Path(args.trace) if args.trace else out / "trace.jsonl"
    outcome.write_trace(trace_path)
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, allow_nan=False)
        fh.write("\n")
    print(json.dumps(summary, allow_nan=False))
    if outcome.termination == "fault":
        print(f"solve fault: {outcome.message}", file=sys.stderr)
        return EXIT_FAULT
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench.suite import load_manifest, run_suite, score_runs, write_results

    manifest = load_manifest(args.manifest)
    if args.budget_factor is not None:
        manifest = dataclasses.replace(manifest, budget_factor=args.budget_factor)
    tau = manifest.tau if args.tau is None else args.tau
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in ("msg1", "msg2")]
    if bad or not methods:
        raise InputError(f"methods must be a comma-separated subset of msg1,msg2, got {args.methods!r}")
    if args.workers < 1:
        raise InputError("--workers must be at least 1")
    try:
        base = SolverConfig(sigma=args.sigma)
    except ContractViolation as exc:
        raise InputError(str(exc)) from exc
    runs = run_suite(manifest, methods, base, workers=args.workers)
    rows = score_runs(runs, tau)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_results(rows, args.out)
    faults = sum(r.outcome.termination == "fault" for r in runs)
    print(f"{len(rows)} result rows written to {args.out} ({faults} faulted runs)")
    return EXIT_OK


def alpha_grid(args) -> np.ndarray:
    if args.alpha:
        try:
            grid = np.array([float(a) for a in args.alpha.split(",")])
        except ValueError as exc:
            raise InputError(f"bad --alpha list: {exc}") from exc
    else:
        if args.alpha_max <= 0 or args.alpha_step <= 0:
            raise InputError("--alpha-max and --alpha-step must be positive")
        count = int(np.floor(args.alpha_max / args.alpha_step + 1e-9)) + 1
        grid = args.alpha_step * np.arange(count)
    if np.any(np.diff(grid) < 0):
        raise InputError("alpha grid must be nondecreasing")
    return grid


def cmd_profile(args) -> int:
    from .bench.suite import profile_from_results, read_results, write_profile

    try:
        rows = read_results(args.results)
        grid = alpha_grid(args)
        curves = profile_from_results(rows, args.tau, args.metric, grid)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{args.results}: {exc}") from exc
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_profile(curves, grid, args.out)
    print(f"profile for {len(curves)} methods written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="manifold-sampling", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="run one solve and write trace.jsonl and summary.json")
    p.add_argument("--problem", type=Path, help="TOML problem file (map, x0, [h])")
    p.add_argument("--map", help="registry map name")
    p.add_argument("--h", type=Path, help="TOML file with the h specification")
    p.add_argument("--instance", type=int, metavar="L",
                   help="generate a random piecewise-quadratic h with L pieces")
    p.add_argument("--seed", type=int, default=0, help="seed for --instance generation")
    _config_args(p)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--trace", help="trace path (default OUT/trace.jsonl)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a suite manifest and write the results CSV")
    p.add_argument("manifest", type=Path)
    p.add_argument("--methods", default="msg1,msg2")
    p.add_argument("--out", default="results.csv")
    p.add_argument("--tau", type=float, help="solve level (default: manifest tau)")
    p.add_argument("--sigma", type=float, default=1e-8)
    p.add_argument("--budget-factor", type=int, help="override the manifest budget_factor")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("profile", help="turn a results CSV into data-profile curves")
    p.add_argument("results", type=Path)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--metric", choices=["f", "gamma"], default="f")
    p.add_argument("--out", default="profile.csv")
    p.add_argument("--alpha", help="comma-separated alpha values")
    p.add_argument("--alpha-max", type=float, default=1000.0)
    p.add_argument("--alpha-step", type=float, default=1.0)
    p.set_defaults(func=cmd_profile)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (OSError, ContractViolation, KeyError, ValueError) as exc:
        # unreadable files, malformed TOML, unknown map names, shape mismatches
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
