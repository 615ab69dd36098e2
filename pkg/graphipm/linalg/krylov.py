"""Preconditioned Richardson and restarted GMRES.

Both iterate from ``d = 0`` and stop when ``||p - M d|| <= tol * (1 + ||p||)``.
``precond`` is anything with a ``matvec`` (a ``scipy.sparse.linalg.LinearOperator``
or a :class:`~graphipm.linalg.ras.RasPreconditioner`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

logger = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e8


@dataclass
class IterStats:
    iterations: int = 0
    residual: float = 0.0
    converged: bool = False
    adaptations: int = 0
    history: list[float] = field(default_factory=list)

    @property
    def relative_residual(self) -> float:
        return self.history[-1] / self.history[0] if self.history and self.history[0] else 0.0


def identity_preconditioner(n: int) -> spla.LinearOperator:
    return spla.LinearOperator((n, n), matvec=lambda r: np.array(r, dtype=float, copy=True), dtype=float)


def richardson(M, p: np.ndarray, precond, tol: float = 1e-8, maxit: int = 200) -> tuple[np.ndarray, IterStats]:
    """Undamped iteration ``d <- d + P^{-1} (p - M d)``."""
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    p = np.asarray(p, dtype=float)
    d = np.zeros_like(p)
    target = tol * (1.0 + np.linalg.norm(p))
    r = p.copy()
    norm_r = float(np.linalg.norm(r))
    stats = IterStats(residual=norm_r, history=[norm_r])
    while norm_r > target and stats.iterations < maxit:
        d += precond.matvec(r)
        r = p - M @ d
        norm_r = float(np.linalg.norm(r))
        stats.iterations += 1
        stats.history.append(norm_r)
        if not np.isfinite(norm_r) or norm_r > DIVERGENCE_FACTOR * (1.0 + stats.history[0]):
            logger.debug("Richardson diverged at iteration %d (residual %.2e)", stats.iterations, norm_r)
            break
    stats.residual = norm_r
    stats.converged = bool(np.isfinite(norm_r) and norm_r <= target)
    return d, stats


def gmres(M, p: np.ndarray, precond, tol: float = 1e-8, maxit: int = 200,
          restart: int = 100) -> tuple[np.ndarray, IterStats]:
    """Right-preconditioned GMRES(restart) with modified Gram-Schmidt and Givens rotations."""
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    d = np.zeros_like(p)
    target = tol * (1.0 + np.linalg.norm(p))
    r = p.copy()
    beta = float(np.linalg.norm(r))
    stats = IterStats(residual=beta, history=[beta])

    while beta > target and stats.iterations < maxit:
        m = max(1, min(restart, maxit - stats.iterations, n))
        V = np.zeros((n, m + 1))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[:, 0] = r / beta
        j_used = 0
        for j in range(m):
            w = M @ precond.matvec(V[:, j])
            for i in range(j + 1):
                H[i, j] = V[:, i] @ w
                w -= H[i, j] * V[:, i]
            h_next = float(np.linalg.norm(w))
            H[j + 1, j] = h_next
            for i in range(j):
                hij = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = hij
            denom = np.hypot(H[j, j], H[j + 1, j])
            if denom == 0.0:
                break
            cs[j] = H[j, j] / denom
            sn[j] = H[j + 1, j] / denom
            H[j, j] = denom
            breakdown = h_next <= 1e-14 * denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            j_used = j + 1
            stats.iterations += 1
            stats.history.append(abs(g[j + 1]))
            if abs(g[j + 1]) <= target or breakdown:
                break
            V[:, j + 1] = w / h_next
        if j_used == 0:
            break
        y = sla.solve_triangular(H[:j_used, :j_used], g[:j_used], lower=False, check_finite=False)
        d += precond.matvec(V[:, :j_used] @ y)
        r = p - M @ d
        beta = float(np.linalg.norm(r))
        if not np.isfinite(beta):
            break

    stats.residual = beta
    stats.converged = bool(np.isfinite(beta) and beta <= target)
    return d, stats
