"""Regularized primal-dual Newton system.

For an iterate ``(x, lam, z_L, z_U)`` and barrier parameter ``mu`` the
condensed system is::

    [ W + Sigma + dw I    A^T   ] [dx  ]     [ grad phi + A^T lam ]
    [ A                 -dc I   ] [dlam] = - [ c(x)               ]

with ``Sigma = z_L/(x-l) + z_U/(u-x)`` on bounded components and
``grad phi = grad f - mu/(x-l) + mu/(u-x)``. The matrix is kept as lower
triangle triplets whose pattern (Hessian, Jacobian, full diagonal) is fixed
for a given NLP; only values change between iterations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from graphipm.errors import NotInterior
from graphipm.io import atomic_write_text
from graphipm.nlp import NlpProtocol, PrimalDualPoint

logger = logging.getLogger(__name__)


def bound_masks(nlp: NlpProtocol) -> tuple[np.ndarray, np.ndarray]:
    return np.isfinite(nlp.x_lower), np.isfinite(nlp.x_upper)


def bound_slacks(nlp: NlpProtocol, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distances to finite bounds; 1.0 where the bound is absent."""
    has_l, has_u = bound_masks(nlp)
    s_l = np.where(has_l, x - np.where(has_l, nlp.x_lower, 0.0), 1.0)
    s_u = np.where(has_u, np.where(has_u, nlp.x_upper, 0.0) - x, 1.0)
    return s_l, s_u


def check_interior(nlp: NlpProtocol, point: PrimalDualPoint) -> None:
    has_l, has_u = bound_masks(nlp)
    s_l, s_u = bound_slacks(nlp, point.x)
    if np.any(s_l[has_l] <= 0) or np.any(s_u[has_u] <= 0):
        raise NotInterior("Primal point is not strictly inside its bounds")
    if np.any(point.z_lower[has_l] <= 0) or np.any(point.z_upper[has_u] <= 0):
        raise NotInterior("Bound multipliers must be positive where a bound exists")


@dataclass(frozen=True)
class KktSystem:
    n: int
    m: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    rhs: np.ndarray
    sigma: np.ndarray
    hess_values: np.ndarray
    n_hess: int
    diag_start: int
    delta_w: float
    delta_c: float
    mu: float

    @property
    def dimension(self) -> int:
        return self.n + self.m

    def with_regularization(self, delta_w: float, delta_c: float) -> "KktSystem":
        """Same system with new regularization; only the diagonal block changes."""
        values = self.values.copy()
        diag = values[self.diag_start:]
        diag[: self.n] = self.sigma + delta_w
        diag[self.n:] = -delta_c
        return replace(self, values=values, delta_w=delta_w, delta_c=delta_c)

    @cached_property
    def matrix(self) -> sp.csc_matrix:
        """Full symmetric matrix in CSC form."""
        off = self.rows != self.cols
        r = np.concatenate([self.rows, self.cols[off]])
        c = np.concatenate([self.cols, self.rows[off]])
        v = np.concatenate([self.values, self.values[off]])
        dim = self.dimension
        return sp.coo_matrix((v, (r, c)), shape=(dim, dim)).tocsc()

    def primal_curvature(self, dx: np.ndarray) -> float:
        """``dx^T (W + Sigma + dw I) dx`` from the primal block triplets."""
        mask = (self.rows < self.n) & (self.cols < self.n)
        r, c, v = self.rows[mask], self.cols[mask], self.values[mask]
        weights = np.where(r == c, 1.0, 2.0)
        return float(np.sum(weights * v * dx[r] * dx[c]))

    def hessian_inf_norm(self) -> float:
        r = self.rows[: self.n_hess]
        c = self.cols[: self.n_hess]
        v = np.abs(self.hess_values)
        sums = np.zeros(self.n)
        np.add.at(sums, r, v)
        off = r != c
        np.add.at(sums, c[off], v[off])
        return float(sums.max()) if self.n else 0.0


def barrier_gradient(nlp: NlpProtocol, x: np.ndarray, grad_f: np.ndarray, mu: float) -> np.ndarray:
    has_l, has_u = bound_masks(nlp)
    s_l, s_u = bound_slacks(nlp, x)
    return grad_f - np.where(has_l, mu / s_l, 0.0) + np.where(has_u, mu / s_u, 0.0)


def compute_sigma(nlp: NlpProtocol, point: PrimalDualPoint) -> np.ndarray:
    has_l, has_u = bound_masks(nlp)
    s_l, s_u = bound_slacks(nlp, point.x)
    return np.where(has_l, point.z_lower / s_l, 0.0) + np.where(has_u, point.z_upper / s_u, 0.0)


def assemble(nlp: NlpProtocol, point: PrimalDualPoint, mu: float, delta_w: float = 0.0,
             delta_c: float = 0.0, grad_f: np.ndarray | None = None,
             cons: np.ndarray | None = None, jac_values: np.ndarray | None = None,
             hess_values: np.ndarray | None = None) -> KktSystem:
    """Build the condensed KKT system at ``point``.

    Oracle values may be passed in when the caller already has them.
    """
    check_interior(nlp, point)
    x, lam = point.x, point.lam
    n, m = nlp.n, nlp.m
    grad_f = nlp.gradient(x) if grad_f is None else grad_f
    cons = nlp.constraints(x) if cons is None else cons
    jac_values = nlp.jacobian_values(x) if jac_values is None else jac_values
    hess_values = nlp.hessian_values(x, lam, 1.0) if hess_values is None else hess_values

    sigma = compute_sigma(nlp, point)
    at_lam = np.zeros(n)
    np.add.at(at_lam, nlp.jac_cols, jac_values * lam[nlp.jac_rows])
    rhs = -np.concatenate([barrier_gradient(nlp, x, grad_f, mu) + at_lam, cons])

    dim = n + m
    rows = np.concatenate([nlp.hess_rows, n + nlp.jac_rows, np.arange(dim)]).astype(np.int64)
    cols = np.concatenate([nlp.hess_cols, nlp.jac_cols, np.arange(dim)]).astype(np.int64)
    values = np.concatenate([hess_values, jac_values, sigma + delta_w, np.full(m, -delta_c)])
    return KktSystem(
        n=n, m=m, rows=rows, cols=cols, values=values, rhs=rhs, sigma=sigma,
        hess_values=np.asarray(hess_values, dtype=float), n_hess=len(nlp.hess_rows),
        diag_start=len(nlp.hess_rows) + len(nlp.jac_rows),
        delta_w=float(delta_w), delta_c=float(delta_c), mu=float(mu),
    )


def recover_bound_step(nlp: NlpProtocol, point: PrimalDualPoint, dx: np.ndarray,
                       mu: float) -> tuple[np.ndarray, np.ndarray]:
    """Newton step of the complementarity equations for the bound multipliers."""
    has_l, has_u = bound_masks(nlp)
    s_l, s_u = bound_slacks(nlp, point.x)
    z_l, z_u = point.z_lower, point.z_upper
    dz_l = np.where(has_l, (mu - z_l * s_l - z_l * dx) / s_l, 0.0)
    dz_u = np.where(has_u, (mu - z_u * s_u + z_u * dx) / s_u, 0.0)
    return dz_l, dz_u


def dump_coordinate(kkt: KktSystem, path: Path) -> Path:
    """Write the lower triangle as ``i j value`` lines, 1-based, duplicates summed."""
    lower = sp.tril(kkt.matrix).tocoo()
    order = np.lexsort((lower.row, lower.col))
    lines = [f"% {kkt.dimension} {kkt.dimension} {lower.nnz}"]
    lines += [f"{lower.row[k] + 1} {lower.col[k] + 1} {lower.data[k]:.17g}" for k in order]
    return atomic_write_text(path, "\n".join(lines) + "\n")
