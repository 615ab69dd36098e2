"""The ``bench`` command: a matrix of runs, a merged table and a timing plot.

Runs execute one after another. Every finished run is appended to
``bench.csv`` right away, so a failing configuration never loses the
results before it. The plot is drawn from ``bench.csv`` alone.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from graphipm.cli.config import RunConfig  # noqa: E402
from graphipm.cli.run import RESULT_COLUMNS, append_rows, run  # noqa: E402
from graphipm.io import atomic_write_text  # noqa: E402

logger = logging.getLogger(__name__)

PANELS = [
    ("time_total", "Solution wall time (s)"),
    ("time_linear_solve", "Linear solver time (s)"),
    ("time_function_evaluation", "Function evaluation time (s)"),
]


@dataclass
class BenchResult:
    rows: list[dict[str, Any]]
    csv: Path
    svg: Path

    @property
    def failures(self) -> int:
        return sum(1 for r in self.rows if r["status"] != "optimal")


def parse_strategy(text: str) -> tuple[str, str]:
    """``direct``, ``ras`` or ``ras:<iterator>`` -> (linear solver, iterator)."""
    kind, _, iterator = text.partition(":")
    return kind, iterator or "gmres"


def expand_matrix(base: RunConfig, horizons: Iterable[int], strategies: Iterable[str]) -> list[RunConfig]:
    """One config per (strategy, horizon); each run gets its own output directory."""
    configs = []
    for strategy in strategies:
        kind, iterator = parse_strategy(strategy)
        for T in horizons:
            tag = f"{base.instance_name}-T{T}-{kind if kind == 'direct' else f'ras-{iterator}-K{base.K}'}"
            configs.append(replace(base, horizon=T, linear_solver=kind, iterator=iterator, out=base.out / tag))
    return configs


def _failed_row(config: RunConfig, error: Exception) -> dict[str, Any]:
    row: dict[str, Any] = {col: np.nan for col in RESULT_COLUMNS}
    row.update(config.echo())
    row["status"] = f"error: {type(error).__name__}"
    return row


def bench(configs: list[RunConfig], out: Path) -> BenchResult:
    """Run every config serially and collect one result row per run.

    Args:
        configs: Run configurations, usually from ``expand_matrix``. Fewer than
            two still run, with a warning, and give a one-row table.
        out: Directory for ``bench.csv`` and ``bench.svg``; each run writes its
            own artifacts under its config's ``out``.

    Returns:
        The rows in run order plus the table and plot paths. A config that
        raised has status ``error: <ExceptionName>``.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "bench.csv"
    if csv_path.exists():
        csv_path.unlink()
    if len(configs) < 2:
        logger.warning("Benchmark with %d configuration(s); the table is degenerate", len(configs))

    rows = []
    for k, config in enumerate(configs, start=1):
        logger.info("Benchmark run %d/%d: %s T=%d", k, len(configs), config.strategy, config.horizon)
        try:
            outcome = run(config, csv_path=csv_path)
            rows.append(outcome.row)
        except Exception as e:
            logger.warning("Run %s T=%d failed: %s", config.strategy, config.horizon, e)
            row = _failed_row(config, e)
            append_rows(csv_path, [row])
            rows.append(row)

    svg_path = plot_bench(csv_path, out / "bench.svg")
    return BenchResult(rows, csv_path, svg_path)


def plot_bench(csv_path: Path, svg_path: Path) -> Path:
    """Wall time against horizon per strategy, read from the result table only."""
    frame = pd.read_csv(csv_path)
    iterator = frame["iterator"].fillna("").astype(str)
    frame["strategy"] = np.where(frame["linear_solver"] == "direct", "direct", "ras-" + iterator)

    fig, axes = plt.subplots(len(PANELS), 1, sharex=True, figsize=(6.0, 8.0))
    for ax, (column, title) in zip(axes, PANELS):
        for strategy, group in frame.groupby("strategy", sort=True):
            group = group.sort_values("T")
            ax.plot(group["T"], group[column], marker="o", label=strategy)
        ax.set_ylabel(title)
        ax.grid(True, alpha=0.3)
    axes[0].legend(loc="upper left")
    axes[-1].set_xlabel("Horizon T (periods)")
    fig.tight_layout()

    buffer = io.StringIO()
    fig.savefig(buffer, format="svg")
    plt.close(fig)
    return atomic_write_text(svg_path, buffer.getvalue())
