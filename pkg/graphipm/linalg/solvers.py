"""KKT linear solvers used by the interior-point driver.

``DirectSolver`` factors the whole system. ``SchwarzSolver`` partitions the
problem graph once, then for every system builds a RAS preconditioner and
runs Richardson or GMRES; on non-convergence it widens the overlap until
the centralized limit. Adapted overlaps persist across IPM iterations.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from graphipm.errors import SingularMatrix
from graphipm.kkt import KktSystem
from graphipm.linalg.direct import DENSE_LIMIT, DirectFactor
from graphipm.linalg.krylov import IterStats, gmres, richardson
from graphipm.linalg.ras import adapt_overlap, build_ras
from graphipm.partition import OmegaSpec, SubdomainMap, make_subdomains

logger = logging.getLogger(__name__)

SOLVER_KINDS = ("direct", "ras")
ITERATORS = ("richardson", "gmres")


@dataclass
class LinearSolverOptions:
    kind: str = "direct"
    iterator: str = "gmres"
    K: int = 4
    omega: OmegaSpec = "auto"
    maxit: int = 200
    restart: int = 100
    threads: int = 1
    dense_limit: int = DENSE_LIMIT

    def __post_init__(self):
        if self.kind not in SOLVER_KINDS:
            raise ValueError(f"Invalid linear solver: {self.kind}. Must be one of {list(SOLVER_KINDS)}")
        if self.iterator not in ITERATORS:
            raise ValueError(f"Invalid iterator: {self.iterator}. Must be one of {list(ITERATORS)}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if isinstance(self.omega, str) and self.omega != "auto":
            raise ValueError(f"Invalid omega: {self.omega}. Must be an integer >= 0 or 'auto'")
        if isinstance(self.omega, int) and self.omega < 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")


@dataclass
class LinearSolveInfo:
    iterations: int = 0
    adaptations: int = 0
    seconds: float = 0.0
    stats: IterStats | None = None


class DirectSolver:
    name = "direct"

    def __init__(self, options: LinearSolverOptions | None = None):
        self.options = options or LinearSolverOptions()

    def solve(self, kkt: KktSystem, tol: float | None = None) -> tuple[np.ndarray, LinearSolveInfo]:
        start = time.perf_counter()
        factor = DirectFactor(kkt.matrix, dense_limit=self.options.dense_limit)
        d = factor.solve(kkt.rhs)
        return d, LinearSolveInfo(seconds=time.perf_counter() - start)


class SchwarzSolver:
    name = "ras"

    def __init__(self, U, graph: nx.Graph, options: LinearSolverOptions):
        self.options = options
        K = min(options.K, graph.number_of_nodes())
        self.submap: SubdomainMap = make_subdomains(U, graph, K, options.omega)
        self.total_adaptations = 0

    def solve(self, kkt: KktSystem, tol: float = 1e-8) -> tuple[np.ndarray, LinearSolveInfo]:
        start = time.perf_counter()
        opts = self.options
        P = build_ras(kkt.matrix, self.submap, opts.threads, opts.dense_limit)
        info = LinearSolveInfo()
        while True:
            if opts.iterator == "gmres":
                d, stats = gmres(kkt.matrix, kkt.rhs, P, tol, opts.maxit, opts.restart)
            else:
                d, stats = richardson(kkt.matrix, kkt.rhs, P, tol, opts.maxit)
            info.iterations += stats.iterations
            if stats.converged:
                break
            if P.submap.at_limit() and P.submap.K == 1:
                raise SingularMatrix(
                    f"Iterative solve did not converge at the centralized limit "
                    f"(residual {stats.residual:.2e})"
                )
            P = adapt_overlap(P, kkt.matrix)
            info.adaptations += 1
            logger.debug("RAS overlap widened to %s", P.omegas)
        stats.adaptations = info.adaptations
        info.stats = stats
        self.submap = P.submap
        self.total_adaptations += info.adaptations
        info.seconds = time.perf_counter() - start
        return d, info


def make_linear_solver(options: LinearSolverOptions, U=None, graph: nx.Graph | None = None):
    if options.kind == "direct":
        return DirectSolver(options)
    if U is None or graph is None:
        raise ValueError("The ras solver needs node index sets and the problem graph")
    return SchwarzSolver(U, graph, options)
