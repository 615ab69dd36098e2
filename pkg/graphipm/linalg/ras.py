"""Restricted additive Schwarz preconditioner.

For each subdomain ``k`` the block ``M[W_omega_k, W_omega_k]`` is factored
once. Applying the preconditioner gathers the residual on ``W_omega_k``,
solves, and scatters back only the entries of ``W_k``::

    P^{-1} r = sum_k  R~_k^T  M_k^{-1}  R_k r

Subdomains with identical expanded index sets share a factorization, so the
centralized limit (every expansion is the whole graph) factors ``M`` once.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from graphipm.errors import SingularMatrix, SubdomainSingular
from graphipm.linalg.direct import DENSE_LIMIT, DirectFactor
from graphipm.partition import SubdomainMap, build_index_maps

logger = logging.getLogger(__name__)


class RasPreconditioner(spla.LinearOperator):

    def __init__(self, matrix, submap: SubdomainMap, factors: list[DirectFactor],
                 factor_of: list[int], threads: int = 1, dense_limit: int = DENSE_LIMIT):
        n = submap.dimension
        super().__init__(dtype=np.float64, shape=(n, n))
        self.matrix = matrix
        self.submap = submap
        self.factors = factors
        self.factor_of = factor_of
        self.threads = threads
        self.dense_limit = dense_limit

    def _local_solve(self, k: int, r: np.ndarray) -> np.ndarray:
        return self.factors[self.factor_of[k]].solve(self.submap.restrict(k, r))

    def _matvec(self, r):
        r = np.asarray(r, dtype=float).ravel()
        out = np.zeros(self.shape[0])
        ks = range(self.submap.K)
        if self.threads > 1 and self.submap.K > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                locals_ = list(pool.map(lambda k: self._local_solve(k, r), ks))
        else:
            locals_ = [self._local_solve(k, r) for k in ks]
        for k, local in zip(ks, locals_):
            self.submap.prolong(k, local, out)
        return out

    def apply(self, r: np.ndarray) -> np.ndarray:
        return self._matvec(r)

    @property
    def omegas(self) -> list[int]:
        return list(self.submap.omegas)


def build_ras(matrix, submap: SubdomainMap, threads: int = 1,
              dense_limit: int = DENSE_LIMIT) -> RasPreconditioner:
    """Extract and factor every subdomain block of ``matrix``.

    Args:
        matrix: Full symmetric KKT matrix.
        submap: Subdomain map over the same primal-dual indices.
        threads: Subdomain blocks factored concurrently.
        dense_limit: Passed to :class:`DirectFactor` for each block.

    Returns:
        The preconditioner; applying it solves every expanded block and
        keeps only the rows each subdomain owns.

    Raises:
        ValueError: ``matrix`` and ``submap`` disagree on the dimension.
        SubdomainSingular: A subdomain block could not be factored.
    """
    M = sp.csc_matrix(matrix)
    if M.shape[0] != submap.dimension:
        raise ValueError(f"Matrix dimension {M.shape[0]} does not match subdomain map {submap.dimension}")

    unique: dict[bytes, int] = {}
    factor_of: list[int] = []
    owners: list[int] = []
    for k, idx in enumerate(submap.W_omega):
        key = idx.tobytes()
        if key not in unique:
            unique[key] = len(owners)
            owners.append(k)
        factor_of.append(unique[key])

    def factor(k: int) -> DirectFactor:
        idx = submap.W_omega[k]
        try:
            return DirectFactor(M[idx][:, idx], dense_limit=dense_limit)
        except SingularMatrix as e:
            raise SubdomainSingular(k, f"Subdomain {k} block is singular: {e}") from e

    if threads > 1 and len(owners) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            factors = list(pool.map(factor, owners))
    else:
        factors = [factor(k) for k in owners]
    logger.debug("Built RAS with %d subdomains, %d distinct factors", submap.K, len(factors))
    return RasPreconditioner(M, submap, factors, factor_of, threads, dense_limit)


def centralized_map(submap: SubdomainMap) -> SubdomainMap:
    """Single subdomain holding every node: the direct-solve limit."""
    nodes = sorted(submap.graph.nodes)
    return build_index_maps(submap.U, submap.graph, [nodes], [nodes])


def adapt_overlap(P: RasPreconditioner, matrix=None) -> RasPreconditioner:
    """Increase every overlap by one level and refactor.

    At the cap the centralized preconditioner is returned.
    """
    matrix = P.matrix if matrix is None else matrix
    submap = P.submap
    if submap.at_limit():
        if submap.K == 1 and len(submap.W_omega[0]) == submap.dimension:
            return P if matrix is P.matrix else build_ras(matrix, submap, P.threads, P.dense_limit)
        new_map = centralized_map(submap)
    else:
        new_map = submap.with_omegas([o + 1 for o in submap.omegas])
    logger.debug("Adapting overlap %s -> %s", submap.omegas, new_map.omegas)
    return build_ras(matrix, new_map, P.threads, P.dense_limit)


def block_jacobi(matrix, blocks: list[np.ndarray], r: np.ndarray) -> np.ndarray:
    """Reference block-Jacobi update: ``out[B] = M[B, B]^{-1} r[B]`` per block."""
    M = sp.csc_matrix(matrix)
    out = np.zeros_like(np.asarray(r, dtype=float))
    for idx in blocks:
        out[idx] = spla.spsolve(M[idx][:, idx].tocsc(), r[idx])
    return out


def apply_ras(P: RasPreconditioner, r: np.ndarray) -> np.ndarray:
    return P.apply(r)
