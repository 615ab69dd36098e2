"""Shared builders for the test suite."""

from __future__ import annotations

import networkx as nx
import numpy as np
import pytest
import scipy.sparse as sp

from graphipm.instances.gas import Demand, GasInstance, Junction, Pipe, Receipt
from graphipm.model import OptiGraph


def chain_graph(T: int, nvars: int = 2, cycle: bool = False) -> OptiGraph:
    """A small convex chain: per node ``min sum (x - t)^2`` with one inner and one link row."""
    graph = OptiGraph(name=f"chain-{T}")
    xs = {}
    for t in range(1, T + 1):
        graph.add_node(f"n{t}")
    for t in range(2, T + 1):
        graph.add_edge(t - 1, t)
    if cycle and T > 2:
        graph.add_edge(T, 1)
    for t in range(1, T + 1):
        xs[t] = [graph.add_variable(t, -10.0, 10.0, start=0.5, name=f"x[{k},{t}]") for k in range(nvars)]
        graph.add_objective_term(t, sum((x - float(t)) ** 2 for x in xs[t]))
        graph.add_constraint(t, xs[t][0] * xs[t][0] + xs[t][-1], "<=", 50.0, name=f"cap[{t}]")
    for t in range(2, T + 1):
        graph.add_edge_link(t - 1, t, xs[t][0] - xs[t - 1][-1], 0.0, name=f"link[{t}]")
    return graph


def random_sqd(U: dict[int, np.ndarray], graph: nx.Graph, n: int, m: int,
               rng: np.random.Generator) -> sp.csc_matrix:
    """Random symmetric quasi-definite matrix ``[[H, A^T], [A, -D]]`` with graph-local coupling.

    ``U[i]`` holds the primal then dual indices of node ``i``; entries only
    couple indices of the same or adjacent nodes.
    """
    dim = n + m
    owner = np.empty(dim, dtype=np.int64)
    for node, idx in U.items():
        owner[idx] = node
    rows, cols, vals = [], [], []
    for i in range(dim):
        for j in range(i):
            a, b = owner[i], owner[j]
            if a != b and not graph.has_edge(a, b):
                continue
            if (i < n) != (j < n) or (i < n and j < n):
                if rng.random() < 0.3:
                    rows.append(i)
                    cols.append(j)
                    vals.append(rng.normal())
    M = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    M = M + M.T
    diag = np.empty(dim)
    off = np.asarray(abs(M).sum(axis=1)).ravel()
    diag[:n] = off[:n] + 1.0 + rng.random(n)
    diag[n:] = -(off[n:] + 1.0 + rng.random(m))
    return (M + sp.diags(diag)).tocsc()


def chain_layout(nodes: int, primal: int, dual: int) -> tuple[dict[int, np.ndarray], nx.Graph, int, int]:
    """Index sets for a path graph whose nodes own ``primal`` columns and ``dual`` rows each."""
    n, m = nodes * primal, nodes * dual
    U = {
        i: np.concatenate([np.arange((i - 1) * primal, i * primal),
                           n + np.arange((i - 1) * dual, i * dual)]).astype(np.int64)
        for i in range(1, nodes + 1)
    }
    return U, nx.path_graph(range(1, nodes + 1)), n, m


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def two_junction_gas() -> GasInstance:
    """One pipe between a receipt and a delivery; no compressors."""
    return GasInstance(
        name="pair",
        junctions=[Junction("A", 0.5, 1.5), Junction("B", 0.5, 1.5)],
        pipes=[Pipe("P", "A", "B", length=2.0, diameter=1.0, friction=0.01)],
        receipts=[Receipt("R", "A", 2.0, [1.0])],
        demands=[Demand("D", "B", 1.0, [2.0])],
    )


def interior_points(nlp, rng: np.random.Generator, count: int) -> list[np.ndarray]:
    """Random points strictly inside the variable bounds, near the start point."""
    lo = np.where(np.isfinite(nlp.x_lower), nlp.x_lower, nlp.x_start - 1.0)
    hi = np.where(np.isfinite(nlp.x_upper), nlp.x_upper, nlp.x_start + 1.0)
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    width = hi - lo
    return [lo + width * rng.uniform(0.2, 0.8, size=nlp.n) for _ in range(count)]


def assert_derivatives(nlp, point: np.ndarray, lam: np.ndarray, eps: float = 1e-6,
                       rtol: float = 1e-6, atol: float = 1e-5) -> None:
    """Gradient, Jacobian and Lagrangian Hessian against central differences."""
    n, m = nlp.n, nlp.m
    grad = nlp.gradient(point)
    J = sp.coo_matrix((nlp.jacobian_values(point), (nlp.jac_rows, nlp.jac_cols)), shape=(m, n)).toarray()
    hv = nlp.hessian_values(point, lam, 1.0)
    H = sp.coo_matrix((hv, (nlp.hess_rows, nlp.hess_cols)), shape=(n, n)).toarray()
    H = H + np.tril(H, -1).T

    fd_grad = np.zeros(n)
    fd_jac = np.zeros((m, n))
    fd_hess = np.zeros((n, n))

    def lagrangian_gradient(x):
        Jx = sp.coo_matrix((nlp.jacobian_values(x), (nlp.jac_rows, nlp.jac_cols)), shape=(m, n))
        return nlp.gradient(x) + Jx.T @ lam

    for j in range(n):
        e = np.zeros(n)
        e[j] = eps
        fd_grad[j] = (nlp.objective(point + e) - nlp.objective(point - e)) / (2 * eps)
        fd_jac[:, j] = (nlp.constraints(point + e) - nlp.constraints(point - e)) / (2 * eps)
        fd_hess[:, j] = (lagrangian_gradient(point + e) - lagrangian_gradient(point - e)) / (2 * eps)

    np.testing.assert_allclose(grad, fd_grad, rtol=rtol, atol=atol)
    np.testing.assert_allclose(J, fd_jac, rtol=rtol, atol=atol)
    np.testing.assert_allclose(np.tril(H), np.tril(0.5 * (fd_hess + fd_hess.T)), rtol=rtol, atol=atol)
