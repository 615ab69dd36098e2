"""Filter line-search interior-point solver."""

from graphipm.ipm.filter import Filter, filter_accept
from graphipm.ipm.options import IpmOptions
from graphipm.ipm.restoration import RestorationNLP
from graphipm.ipm.scaling import ScaledNLP, gradient_scaling
from graphipm.ipm.solver import (
    LOG_HEADER,
    STATUSES,
    IpmState,
    SolveReport,
    compute_step,
    curvature_test,
    fraction_to_boundary,
    restoration,
    solve,
    update_barrier,
)

__all__ = [
    "Filter",
    "IpmOptions",
    "IpmState",
    "LOG_HEADER",
    "RestorationNLP",
    "STATUSES",
    "ScaledNLP",
    "SolveReport",
    "compute_step",
    "curvature_test",
    "filter_accept",
    "fraction_to_boundary",
    "gradient_scaling",
    "restoration",
    "solve",
    "update_barrier",
]
