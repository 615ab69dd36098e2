"""Direct factorization of symmetric, possibly indefinite, matrices.

Blocks up to ``dense_limit`` rows use a Bunch-Kaufman ``L D L^T``
factorization (1x1 and 2x2 pivots) of the reverse Cuthill-McKee permuted
matrix; larger blocks use sparse LU with a symmetric minimum-degree column
ordering. Every solve is followed by one iterative-refinement step when
the residual is above ``refine_tol * (1 + ||b||)``.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import reverse_cuthill_mckee

from graphipm.errors import SingularMatrix

logger = logging.getLogger(__name__)

DENSE_LIMIT = 1000
REFINE_TOL = 1e-12


class DirectFactor:
    """Reusable factorization of a symmetric, possibly indefinite, matrix.

    Only the dense path (``n <= dense_limit``) is a symmetric indefinite
    factorization: Bunch-Kaufman ``L D L^T`` from ``scipy.linalg.ldl``. Above
    ``dense_limit`` the matrix is factored by sparse LU (``splu``) and its
    symmetry is used only for the fill-reducing ordering. ``method`` names the path taken.
    """

    def __init__(self, matrix, dense_limit: int = DENSE_LIMIT, refine_tol: float = REFINE_TOL):
        self.matrix = sp.csc_matrix(matrix, dtype=float)
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError(f"Matrix must be square, got {self.matrix.shape}")
        self.n = self.matrix.shape[0]
        self.refine_tol = refine_tol
        self.dense = self.n <= dense_limit
        if self.n == 0:
            return
        if self.dense:
            self._factor_dense()
        else:
            self._factor_sparse()

    @property
    def method(self) -> str:
        return "ldl" if self.dense else "lu"

    def _factor_dense(self) -> None:
        perm = reverse_cuthill_mckee(sp.csr_matrix(self.matrix), symmetric_mode=True)
        a = self.matrix.toarray()[np.ix_(perm, perm)]
        lu, d, p = sla.ldl(a, lower=True)
        scale = max(float(np.abs(a).max()), 1.0)
        threshold = np.finfo(float).eps * self.n * scale
        i = 0
        while i < self.n:
            if i + 1 < self.n and d[i + 1, i] != 0.0:
                eigs = np.linalg.eigvalsh(d[i:i + 2, i:i + 2])
                if np.min(np.abs(eigs)) <= threshold:
                    raise SingularMatrix(f"Singular 2x2 pivot at position {i}")
                i += 2
            else:
                if abs(d[i, i]) <= threshold:
                    raise SingularMatrix(f"Zero pivot at position {i}")
                i += 1
        self._perm = perm
        self._lower = lu[p]
        self._row_perm = p
        bands = np.zeros((3, self.n))
        bands[0, 1:] = np.diag(d, 1)
        bands[1] = np.diag(d)
        bands[2, :-1] = np.diag(d, -1)
        self._d_bands = bands

    def _factor_sparse(self) -> None:
        try:
            self._lu = spla.splu(
                self.matrix,
                permc_spec="MMD_AT_PLUS_A",
                options=dict(SymmetricMode=True),
            )
        except RuntimeError as e:
            raise SingularMatrix(f"Sparse factorization failed: {e}") from e

    def _solve_once(self, b: np.ndarray) -> np.ndarray:
        if not self.dense:
            return self._lu.solve(b)
        # A[perm][:, perm] = Q^T L D L^T Q with L = lu[p]
        bp = b[self._perm][self._row_perm]
        y = sla.solve_triangular(self._lower, bp, lower=True, unit_diagonal=True, check_finite=False)
        w = sla.solve_banded((1, 1), self._d_bands, y, check_finite=False)
        v = sla.solve_triangular(self._lower.T, w, lower=False, unit_diagonal=True, check_finite=False)
        xp = np.empty_like(v)
        xp[self._row_perm] = v
        x = np.empty_like(xp)
        x[self._perm] = xp
        return x

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if self.n == 0:
            return np.zeros(0)
        x = self._solve_once(b)
        if not np.all(np.isfinite(x)):
            raise SingularMatrix("Solve produced non-finite values")
        r = b - self.matrix @ x
        if np.linalg.norm(r) > self.refine_tol * (1.0 + np.linalg.norm(b)):
            x = x + self._solve_once(r)
        return x


def factor_direct(matrix, dense_limit: int = DENSE_LIMIT) -> DirectFactor:
    return DirectFactor(matrix, dense_limit=dense_limit)
