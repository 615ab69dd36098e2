"""Elastic feasibility problem solved by the restoration phase.

Given the current point ``x_R`` the restoration NLP is::

    min  rho * sum(p + n) + zeta/2 * ||D_R (x - x_R)||^2
    s.t. c(x) - p + n = 0,   p, n >= 0,   x within its original bounds

with ``zeta = sqrt(mu)`` and ``D_R = diag(min(1, 1/|x_R|))``. Variables are
ordered ``[x, p, n]``.
"""

from __future__ import annotations

import numpy as np

from graphipm.nlp import NlpProtocol


class RestorationNLP:

    def __init__(self, base: NlpProtocol, x_ref: np.ndarray, mu: float, rho: float = 1000.0):
        self.base = base
        self.x_ref = np.asarray(x_ref, dtype=float).copy()
        self.mu = float(mu)
        self.rho = float(rho)
        self.zeta = float(np.sqrt(mu))
        self.d_sq = np.minimum(1.0, 1.0 / np.maximum(np.abs(self.x_ref), 1e-300)) ** 2

        n, m = base.n, base.m
        self.n_x = n
        self.n = n + 2 * m
        self.m = m
        self.x_lower = np.concatenate([base.x_lower, np.zeros(2 * m)])
        self.x_upper = np.concatenate([base.x_upper, np.full(2 * m, np.inf)])
        rows = np.arange(m, dtype=np.int64)
        self.jac_rows = np.concatenate([base.jac_rows, rows, rows]).astype(np.int64)
        self.jac_cols = np.concatenate([base.jac_cols, n + rows, n + m + rows]).astype(np.int64)
        self.hess_rows = np.concatenate([base.hess_rows, np.arange(n)]).astype(np.int64)
        self.hess_cols = np.concatenate([base.hess_cols, np.arange(n)]).astype(np.int64)
        self._elastic_jac = np.concatenate([-np.ones(m), np.ones(m)])
        self.x_start = self._start()

    def _start(self) -> np.ndarray:
        """Elastic variables solving the complementarity system at ``x_ref`` in closed form."""
        c = self.base.constraints(self.x_ref)
        mu = max(self.mu, float(np.max(np.abs(c))) if c.size else 0.0)
        a = (mu - self.rho * c) / (2.0 * self.rho)
        n_el = a + np.sqrt(a * a + mu * c / (2.0 * self.rho))
        p_el = c + n_el
        return np.concatenate([self.x_ref, p_el, n_el])

    def split(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n, m = self.n_x, self.m
        return y[:n], y[n:n + m], y[n + m:]

    def objective(self, y):
        x, p, n_el = self.split(y)
        dx = x - self.x_ref
        return self.rho * float(np.sum(p) + np.sum(n_el)) + 0.5 * self.zeta * float(np.sum(self.d_sq * dx * dx))

    def gradient(self, y):
        x, _, _ = self.split(y)
        return np.concatenate([self.zeta * self.d_sq * (x - self.x_ref), np.full(2 * self.m, self.rho)])

    def constraints(self, y):
        x, p, n_el = self.split(y)
        return self.base.constraints(x) - p + n_el

    def jacobian_values(self, y):
        x, _, _ = self.split(y)
        return np.concatenate([self.base.jacobian_values(x), self._elastic_jac])

    def hessian_values(self, y, lam, obj_factor: float = 1.0):
        x, _, _ = self.split(y)
        return np.concatenate([self.base.hessian_values(x, lam, 0.0),
                               obj_factor * self.zeta * self.d_sq])

    def violation(self, y: np.ndarray) -> float:
        """Constraint violation of the original problem at the x part of ``y``."""
        x, _, _ = self.split(y)
        return float(np.sum(np.abs(self.base.constraints(x))))
