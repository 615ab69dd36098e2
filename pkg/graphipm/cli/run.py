"""The ``run`` command: solve one configuration and persist its artifacts.

Artifacts in the output directory:

- ``iterations.log``: the solver's iteration log, header included
- ``solution.json``: per-node primal and dual values keyed by name
- ``partition.txt``: the initial subdomain map (ras runs only)
- ``run.csv``: one result row appended per run
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from graphipm.cli.config import RunConfig, build_model
from graphipm.io import atomic_write_json, atomic_write_text
from graphipm.ipm.solver import SolveReport, solve
from graphipm.model import OptiGraph
from graphipm.nlp import PrimalDualPoint, StandardNLP, flatten
from graphipm.partition import format_partition, make_subdomains

logger = logging.getLogger(__name__)

CONFIG_COLUMNS = [
    "instance", "T", "segments", "linear_solver", "iterator", "K", "omega",
    "tol", "max_iter", "threads", "seed",
]
RESULT_COLUMNS = CONFIG_COLUMNS + [
    "n", "m", "status", "iterations", "objective", "kkt_error", "restorations",
    "linear_iterations", "overlap_adaptations",
    "time_total", "time_function_evaluation", "time_linear_solve", "time_other",
]

SOLUTION_KIND = "solution"
SOLUTION_VERSION = 1


@dataclass
class RunOutcome:
    row: dict[str, Any]
    report: SolveReport
    point: PrimalDualPoint
    nlp: StandardNLP
    graph: OptiGraph
    artifacts: dict[str, Path] = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.report.success


def result_row(config: RunConfig, nlp: StandardNLP, report: SolveReport) -> dict[str, Any]:
    times = report.timings.as_dict()
    return {
        **config.echo(),
        "n": nlp.n,
        "m": nlp.m,
        "status": report.status,
        "iterations": report.iterations,
        "objective": report.objective,
        "kkt_error": report.kkt_error,
        "restorations": report.restorations,
        "linear_iterations": report.linear_iterations,
        "overlap_adaptations": report.overlap_adaptations,
        "time_total": times["total"],
        "time_function_evaluation": times["function_evaluation"],
        "time_linear_solve": times["linear_solve"],
        "time_other": times["other"],
    }


def solution_to_dict(graph: OptiGraph, nlp: StandardNLP, point: PrimalDualPoint,
                     report: SolveReport) -> dict[str, Any]:
    """Per-node values: primal by variable name, multipliers by constraint name.

    ``bound_dual`` is ``z_lower - z_upper`` for every column with a bound.
    """
    nodes = []
    for node in graph.nodes:
        cols = np.flatnonzero(nlp.node_of_column == node)
        rows = np.flatnonzero(nlp.node_of_row == node)
        nodes.append({
            "node": node,
            "label": graph.node_labels.get(node, str(node)),
            "primal": {nlp.var_names[j]: float(point.x[j]) for j in cols},
            "dual": {nlp.con_names[r]: float(point.lam[r]) for r in rows},
            "bound_dual": {nlp.var_names[j]: float(point.z_lower[j] - point.z_upper[j]) for j in cols},
        })
    return {
        "kind": SOLUTION_KIND,
        "version": SOLUTION_VERSION,
        "name": graph.name,
        "status": report.status,
        "objective": report.objective,
        "nodes": nodes,
    }


def append_rows(path: Path, rows: list[dict[str, Any]]) -> Path:
    """Append result rows to a CSV, creating it with the documented columns."""
    path = Path(path)
    frame = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    if path.exists():
        frame = pd.concat([pd.read_csv(path), frame], ignore_index=True)
    return atomic_write_text(path, frame.to_csv(index=False))


def solve_config(config: RunConfig) -> RunOutcome:
    """Build, flatten and solve; nothing is written."""
    graph = build_model(config)
    nlp = flatten(graph, threads=config.threads)
    logger.info("Solving %s: n=%d m=%d nodes=%d (%s)", graph.name, nlp.n, nlp.m,
                len(graph.nodes), config.strategy)
    point, report = solve(nlp, config.ipm_options(), config.linear_options())
    return RunOutcome(result_row(config, nlp, report), report, point, nlp, graph)


def write_artifacts(outcome: RunOutcome, config: RunConfig, csv_path: Path | None = None) -> dict[str, Path]:
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    artifacts = {
        "iterations": atomic_write_text(out / "iterations.log", "\n".join(outcome.report.log_lines) + "\n"),
        "solution": atomic_write_json(out / "solution.json",
                                      json_safe(solution_to_dict(outcome.graph, outcome.nlp,
                                                               outcome.point, outcome.report))),
    }
    if config.linear_solver == "ras":
        K = min(config.K, len(outcome.graph.nodes))
        submap = make_subdomains(outcome.nlp.U, outcome.nlp.graph, K, config.omega)
        artifacts["partition"] = atomic_write_text(out / "partition.txt", format_partition(submap))
    artifacts["csv"] = append_rows(csv_path or out / "run.csv", [outcome.row])
    outcome.artifacts = artifacts
    return artifacts


def run(config: RunConfig, csv_path: Path | None = None) -> RunOutcome:
    """Solve ``config`` and write its artifacts.

    Args:
        config: Validated run configuration.
        csv_path: Result table to append to; defaults to ``<out>/run.csv``.

    Returns:
        The outcome, with artifact paths filled in.
    """
    outcome = solve_config(config)
    write_artifacts(outcome, config, csv_path)
    logger.info("Run finished: %s, %d iterations, objective %.8e",
                outcome.report.status, outcome.report.iterations, outcome.report.objective)
    return outcome


def json_safe(data: Any) -> Any:
    """JSON has no NaN/inf; they are written as null."""
    if isinstance(data, float):
        return data if math.isfinite(data) else None
    if isinstance(data, dict):
        return {k: json_safe(v) for k, v in data.items()}
    if isinstance(data, list):
        return [json_safe(v) for v in data]
    return data
