"""Command dispatcher for ``graph-ipm``.

Every command returns ``(data, exit_code, text)``. With ``--json`` the
data is printed inside the standardized envelope::

    {"status": "success" | "error", "data": ..., "error": null | "message"}

Exit codes: 0 success, 1 solver or data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable

from graphipm.cli.bench import bench, expand_matrix
from graphipm.cli.config import DEFAULT_THREADS, RunConfig
from graphipm.cli.partition_dump import write_partition
from graphipm.cli.run import json_safe, run
from graphipm.cli.validate import format_report, validate_file
from graphipm.errors import GraphIpmError
from graphipm.instances.fixtures import BUNDLED
from graphipm.linalg.solvers import ITERATORS, SOLVER_KINDS

logger = logging.getLogger("graphipm")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

CommandResult = tuple[Any, int, str]


def envelope(data: Any = None, error: str | None = None) -> dict[str, Any]:
    return {"status": "error" if error else "success", "data": data, "error": error}


def omega_arg(text: str) -> int | str:
    if text == "auto":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid omega: {text!r} (an integer or 'auto')") from None


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        instance=args.instance,
        generate=args.generate,
        horizon=args.horizon,
        segments=args.segments,
        linear_solver=getattr(args, "linear_solver", "direct"),
        iterator=getattr(args, "iterator", "gmres"),
        K=args.K,
        omega=args.omega,
        tol=getattr(args, "tol", 1e-8),
        max_iter=getattr(args, "max_iter", 500),
        threads=args.threads,
        out=args.out,
        seed=getattr(args, "seed", 0),
        options_file=getattr(args, "options_file", None),
    )


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    source = parser.add_argument_group("instance")
    source.add_argument("--instance", type=Path, help="Fixture or saved OptiGraph JSON")
    source.add_argument("--generate", choices=sorted(BUNDLED), help="Use a bundled fixture")
    source.add_argument("--horizon", type=int, default=24, help="Number of periods T (default: 24)")
    source.add_argument("--segments", type=int, default=2, help="Segments per gas pipe (default: 2)")
    parser.add_argument("--K", type=int, default=4, help="Number of subdomains (default: 4)")
    parser.add_argument("--omega", type=omega_arg, default="auto", help="Overlap: integer >= 0 or 'auto'")
    parser.add_argument("--threads", type=int, default=DEFAULT_THREADS,
                        help=f"Worker threads (default: {DEFAULT_THREADS})")
    parser.add_argument("--out", type=Path, default=Path("results"), help="Output directory")


def _add_solver_args(parser: argparse.ArgumentParser) -> None:
    _add_model_args(parser)
    parser.add_argument("--linear-solver", choices=list(SOLVER_KINDS), default="direct")
    parser.add_argument("--iterator", choices=list(ITERATORS), default="gmres")
    parser.add_argument("--tol", type=float, default=1e-8, help="KKT error tolerance (default: 1e-8)")
    parser.add_argument("--max-iter", type=int, default=500, help="IPM iteration limit (default: 500)")
    parser.add_argument("--seed", type=int, default=0, help="Recorded with every result row")
    parser.add_argument("--options-file", type=Path, help="JSON file of IpmOptions overrides")


def _add_bench_args(parser: argparse.ArgumentParser) -> None:
    _add_solver_args(parser)
    parser.add_argument("--horizons", type=int, nargs="+", default=[12, 24, 48])
    parser.add_argument("--strategies", nargs="+", default=["direct", "ras:gmres"],
                        help="direct, ras or ras:<iterator>")


def _add_validate_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("files", type=Path, nargs="+", help="Fixture or OptiGraph JSON files")


def cmd_run(args: argparse.Namespace) -> CommandResult:
    config = _config_from_args(args)
    outcome = run(config)
    report = outcome.report
    data = {
        "result": outcome.row,
        "message": report.message,
        "artifacts": {k: str(v) for k, v in outcome.artifacts.items()},
    }
    text = "\n".join([
        f"Status: {report.status}",
        f"Iterations: {report.iterations} (restorations: {report.restorations})",
        f"Objective: {report.objective:.10e}",
        f"KKT error: {report.kkt_error:.2e}",
        f"Time: total {report.timings.total:.3f}s, linear solve {report.timings.linear_solve:.3f}s, "
        f"function evaluation {report.timings.function_evaluation:.3f}s",
        f"Results: {config.out}",
    ])
    if not report.success:
        text += f"\nSolver failed: {report.message}"
    return data, EXIT_OK if report.success else EXIT_FAILURE, text


def cmd_bench(args: argparse.Namespace) -> CommandResult:
    base = _config_from_args(args)
    configs = expand_matrix(base, args.horizons, args.strategies)
    result = bench(configs, base.out)
    data = {"rows": result.rows, "csv": str(result.csv), "svg": str(result.svg), "failures": result.failures}
    text = "\n".join(
        [f"{r['instance']:>10} T={r['T']:<4} {r['linear_solver']:>6} {r['iterator'] or '-':>10} {r['status']}"
         for r in result.rows]
        + [f"Table: {result.csv}", f"Plot: {result.svg}"]
    )
    return data, EXIT_FAILURE if result.failures else EXIT_OK, text


def cmd_partition(args: argparse.Namespace) -> CommandResult:
    config = _config_from_args(args)
    submap, path = write_partition(config)
    data = {
        "K": submap.K,
        "dimension": submap.dimension,
        "omegas": list(submap.omegas),
        "parts": [list(p) for p in submap.parts],
        "expanded": [list(p) for p in submap.expanded],
        "file": str(path),
    }
    return data, EXIT_OK, path.read_text(encoding="utf-8").rstrip("\n")


def cmd_validate(args: argparse.Namespace) -> CommandResult:
    results = {str(path): validate_file(path) for path in args.files}
    text = "\n\n".join(format_report(Path(p), r) for p, r in results.items())
    ok = all(r["valid"] for r in results.values())
    return results, EXIT_OK if ok else EXIT_FAILURE, text


COMMAND_REGISTRY: dict[str, dict[str, Any]] = {
    "run": {
        "description": "Solve one instance and write its log, solution and result row",
        "configure": _add_solver_args,
        "handler": cmd_run,
    },
    "bench": {
        "description": "Run a matrix of horizons and strategies; write bench.csv and bench.svg",
        "configure": _add_bench_args,
        "handler": cmd_bench,
    },
    "partition": {
        "description": "Write the subdomain map of an instance to partition.txt",
        "configure": _add_model_args,
        "handler": cmd_partition,
    },
    "validate": {
        "description": "Check fixtures or saved models and list errors and gaps",
        "configure": _add_validate_args,
        "handler": cmd_validate,
    },
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graph-ipm",
        description="Graph-structured interior-point solver with Schwarz-decomposed KKT systems",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  graph-ipm run --generate gas --horizon 24 --linear-solver ras --K 4
  graph-ipm bench --generate gas --horizons 12 24 48 --strategies direct ras:richardson ras:gmres
  graph-ipm partition --generate power --horizon 8 --K 4 --omega 1
  graph-ipm validate my_network.json
""",
    )
    parser.add_argument("--json", action="store_true", help="Print the result envelope as JSON")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True
    for name, info in COMMAND_REGISTRY.items():
        sub = commands.add_parser(name, help=info["description"], description=info["description"])
        info["configure"](sub)
    return parser


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    """Main entry point for CLI."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    configure_logging(args.verbose)
    handler: Callable[[argparse.Namespace], CommandResult] = COMMAND_REGISTRY[args.command]["handler"]

    error = None
    try:
        data, code, text = handler(args)
    except ValueError as e:
        data, code, text, error = None, EXIT_USAGE, "", f"Invalid configuration: {e}"
    except GraphIpmError as e:
        data, code, text, error = None, EXIT_FAILURE, "", f"{type(e).__name__}: {e}"
    except OSError as e:
        data, code, text, error = None, EXIT_FAILURE, "", f"I/O error: {e}"

    if args.json:
        print(json.dumps(json_safe(envelope(data, error)), indent=2, default=str))
    elif error:
        print(f"graph-ipm {args.command}: {error}", file=sys.stderr)
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
