"""Direct and restricted additive Schwarz solvers for KKT systems."""

from graphipm.linalg.direct import DirectFactor, factor_direct
from graphipm.linalg.krylov import IterStats, gmres, identity_preconditioner, richardson
from graphipm.linalg.ras import RasPreconditioner, adapt_overlap, apply_ras, build_ras
from graphipm.linalg.solvers import (
    DirectSolver,
    LinearSolverOptions,
    SchwarzSolver,
    make_linear_solver,
)

__all__ = [
    "DirectFactor",
    "DirectSolver",
    "IterStats",
    "LinearSolverOptions",
    "RasPreconditioner",
    "SchwarzSolver",
    "adapt_overlap",
    "apply_ras",
    "build_ras",
    "factor_direct",
    "gmres",
    "identity_preconditioner",
    "make_linear_solver",
    "richardson",
]
