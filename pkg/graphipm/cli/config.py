"""Run configuration shared by the ``run``, ``bench`` and ``partition`` commands."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from graphipm.instances.fixtures import BUNDLED, bundled_fixture, instance_from_dict
from graphipm.instances.gas import GasInstance, build_gas
from graphipm.instances.power import build_power
from graphipm.io import load_json
from graphipm.ipm.options import IpmOptions
from graphipm.linalg.solvers import ITERATORS, SOLVER_KINDS, LinearSolverOptions
from graphipm.model import OptiGraph
from graphipm.serialize import FORMAT_KIND, graph_from_dict

DEFAULT_THREADS = 4


@dataclass
class RunConfig:
    """One solve: which instance, which linear algebra, where results go."""

    instance: Path | None = None
    generate: str | None = None
    horizon: int = 24
    segments: int = 2
    linear_solver: str = "direct"
    iterator: str = "gmres"
    K: int = 4
    omega: int | str = "auto"
    tol: float = 1e-8
    max_iter: int = 500
    threads: int = DEFAULT_THREADS
    out: Path = Path("results")
    seed: int = 0
    options_file: Path | None = None
    label: str | None = None
    extra_options: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if (self.instance is None) == (self.generate is None):
            raise ValueError("Exactly one of --instance and --generate is required")
        if self.generate is not None and self.generate not in BUNDLED:
            raise ValueError(f"Invalid generator: {self.generate}. Must be one of {sorted(BUNDLED)}")
        if self.linear_solver not in SOLVER_KINDS:
            raise ValueError(f"Invalid linear solver: {self.linear_solver}. Must be one of {list(SOLVER_KINDS)}")
        if self.iterator not in ITERATORS:
            raise ValueError(f"Invalid iterator: {self.iterator}. Must be one of {list(ITERATORS)}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if isinstance(self.omega, str):
            if self.omega != "auto":
                raise ValueError(f"Invalid omega: {self.omega}. Must be an integer >= 0 or 'auto'")
        elif self.omega < 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if self.horizon < 2:
            raise ValueError(f"horizon must be >= 2, got {self.horizon}")
        if self.segments < 1:
            raise ValueError(f"segments must be >= 1, got {self.segments}")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be >= 0, got {self.max_iter}")
        self.out = Path(self.out)
        if self.instance is not None:
            self.instance = Path(self.instance)

    @property
    def instance_name(self) -> str:
        return self.generate if self.generate is not None else Path(self.instance).stem

    @property
    def strategy(self) -> str:
        return "direct" if self.linear_solver == "direct" else f"ras-{self.iterator}"

    def ipm_options(self) -> IpmOptions:
        """Options file first, then the command-line overrides."""
        base = IpmOptions.from_file(self.options_file) if self.options_file else IpmOptions()
        return base.updated(tol=self.tol, max_iter=self.max_iter, **self.extra_options)

    def linear_options(self) -> LinearSolverOptions:
        return LinearSolverOptions(
            kind=self.linear_solver,
            iterator=self.iterator,
            K=self.K,
            omega=self.omega,
            threads=self.threads,
        )

    def echo(self) -> dict[str, Any]:
        """Config columns of a result row."""
        return {
            "instance": self.instance_name,
            "T": self.horizon,
            "segments": self.segments,
            "linear_solver": self.linear_solver,
            "iterator": self.iterator if self.linear_solver == "ras" else "",
            "K": self.K if self.linear_solver == "ras" else 1,
            "omega": str(self.omega),
            "tol": self.tol,
            "max_iter": self.max_iter,
            "threads": self.threads,
            "seed": self.seed,
        }

    def as_dict(self) -> dict[str, Any]:
        data = asdict(self)
        return {k: (str(v) if isinstance(v, Path) else v) for k, v in data.items()}


def build_model(config: RunConfig) -> OptiGraph:
    """Model for a config: a generator fixture, an instance fixture or a saved OptiGraph."""
    path = bundled_fixture(config.generate) if config.generate else config.instance
    data = load_json(path)
    if isinstance(data, dict) and data.get("kind") == FORMAT_KIND:
        return graph_from_dict(data)
    inst = instance_from_dict(data)
    if isinstance(inst, GasInstance):
        return build_gas(inst, config.horizon, config.segments)
    return build_power(inst, config.horizon)
