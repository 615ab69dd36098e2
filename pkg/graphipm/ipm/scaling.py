"""Gradient-based scaling of the objective and constraints.

Factors are fixed at the start point: ``s_f = min(1, g_max / ||grad f||_inf)``
and per row ``s_r = min(1, g_max / ||grad c_r||_inf)``. The wrapper exposes
the same oracle protocol, so the solver never knows it is scaled.
"""

from __future__ import annotations

import logging
from typing import Any

import numpy as np

from graphipm.nlp import NlpProtocol

logger = logging.getLogger(__name__)


class ScaledNLP:

    def __init__(self, base: NlpProtocol, obj_scale: float, con_scale: np.ndarray):
        self.base = base
        self.obj_scale = float(obj_scale)
        self.con_scale = np.asarray(con_scale, dtype=float)
        self._jac_scale = self.con_scale[base.jac_rows] if len(base.jac_rows) else np.zeros(0)

    def __getattr__(self, name: str) -> Any:
        # n, m, bounds, sparsity, U, graph and names come from the wrapped NLP
        return getattr(self.base, name)

    def objective(self, x):
        return self.obj_scale * self.base.objective(x)

    def gradient(self, x):
        return self.obj_scale * self.base.gradient(x)

    def constraints(self, x):
        return self.con_scale * self.base.constraints(x)

    def jacobian_values(self, x):
        return self._jac_scale * self.base.jacobian_values(x)

    def hessian_values(self, x, lam, obj_factor: float = 1.0):
        return self.base.hessian_values(x, lam * self.con_scale, obj_factor * self.obj_scale)

    def unscale_multipliers(self, lam: np.ndarray, z_lower: np.ndarray,
                            z_upper: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (lam * self.con_scale / self.obj_scale,
                z_lower / self.obj_scale, z_upper / self.obj_scale)


def gradient_scaling(nlp: NlpProtocol, x: np.ndarray, g_max: float = 100.0) -> ScaledNLP:
    grad = nlp.gradient(x)
    gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
    obj_scale = min(1.0, g_max / gnorm) if gnorm > 0 else 1.0
    row_max = np.zeros(nlp.m)
    if nlp.m:
        np.maximum.at(row_max, nlp.jac_rows, np.abs(nlp.jacobian_values(x)))
    con_scale = np.where(row_max > g_max, g_max / np.where(row_max > 0, row_max, 1.0), 1.0)
    scaled = int(np.sum(con_scale < 1.0))
    if obj_scale < 1.0 or scaled:
        logger.debug("Scaling objective by %.3e and %d constraint rows", obj_scale, scaled)
    return ScaledNLP(nlp, obj_scale, con_scale)
