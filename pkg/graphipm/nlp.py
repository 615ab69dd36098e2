"""Flattened NLP form and parallel per-node oracles.

``flatten`` turns an :class:`~graphipm.model.OptiGraph` into a
:class:`StandardNLP`::

    min f(x)  s.t.  c(x) = 0,  lower <= x <= upper

Inequalities become equalities with a bounded slack owned by the
constraint's node. Node ``i`` owns a contiguous block of primal indices
(its variables, then its slacks) and a contiguous block of constraint rows
(inner constraints, then link constraints); ``U[i]`` lists both in the
primal-dual index space ``0 .. n+m-1`` (rows offset by ``n``).

Oracles evaluate node blocks independently, optionally on a thread pool,
and merge partial results in node order, so values do not depend on the
thread count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence, TypeVar

import networkx as nx
import numpy as np

from graphipm.errors import DomainError, EmptyModel, TrialPointFailure
from graphipm.expr import DerivativeWorkspace, Tape
from graphipm.model import OptiGraph

logger = logging.getLogger(__name__)

T = TypeVar("T")

MODES = ("objective", "gradient", "constraints", "jacobian", "hessian")


class NlpProtocol(Protocol):
    """Oracle interface consumed by the interior-point solver."""

    n: int
    m: int
    x_lower: np.ndarray
    x_upper: np.ndarray
    x_start: np.ndarray
    jac_rows: np.ndarray
    jac_cols: np.ndarray
    hess_rows: np.ndarray
    hess_cols: np.ndarray

    def objective(self, x: np.ndarray) -> float: ...
    def gradient(self, x: np.ndarray) -> np.ndarray: ...
    def constraints(self, x: np.ndarray) -> np.ndarray: ...
    def jacobian_values(self, x: np.ndarray) -> np.ndarray: ...
    def hessian_values(self, x: np.ndarray, lam: np.ndarray, obj_factor: float = 1.0) -> np.ndarray: ...


@dataclass
class PrimalDualPoint:
    x: np.ndarray
    lam: np.ndarray
    z_lower: np.ndarray
    z_upper: np.ndarray

    def copy(self) -> "PrimalDualPoint":
        return PrimalDualPoint(self.x.copy(), self.lam.copy(), self.z_lower.copy(), self.z_upper.copy())


@dataclass
class NodeBlock:
    """Compiled oracle data for one graph node."""

    node: int
    columns: range
    rows: range
    objective_tapes: list[Tape]
    constraint_tapes: list[Tape]
    rhs: np.ndarray
    slack_column: np.ndarray  # -1 when the row has no slack
    slack_sign: np.ndarray
    jac_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    jac_cols: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    hess_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    hess_cols: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def build_structure(self) -> None:
        jr, jc = [], []
        for r, tape in enumerate(self.constraint_tapes):
            row = self.rows[r]
            jr.extend([row] * len(tape.columns))
            jc.extend(tape.columns.tolist())
            if self.slack_column[r] >= 0:
                jr.append(row)
                jc.append(int(self.slack_column[r]))
        self.jac_rows = np.asarray(jr, dtype=np.int64)
        self.jac_cols = np.asarray(jc, dtype=np.int64)
        hr, hc = [], []
        for tape in self.objective_tapes + self.constraint_tapes:
            for i, j in tape.hessian_pairs:
                hr.append(int(tape.columns[i]))
                hc.append(int(tape.columns[j]))
        self.hess_rows = np.asarray(hr, dtype=np.int64)
        self.hess_cols = np.asarray(hc, dtype=np.int64)

    # per-node oracles

    def objective(self, x: np.ndarray) -> float:
        ws = DerivativeWorkspace()
        total = 0.0
        for tape in self.objective_tapes:
            total += tape.value(x, ws)
        return total

    def gradient(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ws = DerivativeWorkspace()
        parts = [tape.gradient(x, ws) for tape in self.objective_tapes]
        if not parts:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        return (np.concatenate([p.indices for p in parts]),
                np.concatenate([p.values for p in parts]))

    def constraints(self, x: np.ndarray) -> np.ndarray:
        ws = DerivativeWorkspace()
        out = np.empty(len(self.constraint_tapes))
        for r, tape in enumerate(self.constraint_tapes):
            value = tape.value(x, ws) - self.rhs[r]
            if self.slack_column[r] >= 0:
                value += self.slack_sign[r] * x[self.slack_column[r]]
            out[r] = value
        return out

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        ws = DerivativeWorkspace()
        vals: list[float] = []
        for r, tape in enumerate(self.constraint_tapes):
            vals.extend(tape.gradient(x, ws).values.tolist())
            if self.slack_column[r] >= 0:
                vals.append(float(self.slack_sign[r]))
        return np.asarray(vals, dtype=float)

    def hessian(self, x: np.ndarray, lam: np.ndarray, obj_factor: float) -> np.ndarray:
        ws = DerivativeWorkspace()
        parts = [tape.hessian(x, obj_factor, ws).values for tape in self.objective_tapes]
        for r, tape in enumerate(self.constraint_tapes):
            if tape.hessian_pairs:
                parts.append(tape.hessian(x, float(lam[self.rows[r]]), ws).values)
        return np.concatenate(parts) if parts else np.zeros(0)


@dataclass
class StandardNLP:
    """Flattened NLP with node-partitioned oracles."""

    name: str
    n: int
    m: int
    x_lower: np.ndarray
    x_upper: np.ndarray
    x_start: np.ndarray
    var_names: list[str]
    con_names: list[str]
    node_ids: list[int]
    U: dict[int, np.ndarray]
    blocks: list[NodeBlock]
    column_of: dict[int, int]
    row_of: dict[int, int]
    node_of_column: np.ndarray
    node_of_row: np.ndarray
    jac_rows: np.ndarray
    jac_cols: np.ndarray
    hess_rows: np.ndarray
    hess_cols: np.ndarray
    threads: int = 1
    graph: nx.Graph | None = None

    def _map(self, fn: Callable[[NodeBlock], T]) -> list[T]:
        try:
            if self.threads <= 1 or len(self.blocks) <= 1:
                return [fn(block) for block in self.blocks]
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(fn, self.blocks))
        except DomainError as exc:
            raise TrialPointFailure(f"Oracle evaluation failed: {exc}") from exc

    def objective(self, x: np.ndarray) -> float:
        total = 0.0
        for part in self._map(lambda b: b.objective(x)):
            total += part
        return total

    def gradient(self, x: np.ndarray) -> np.ndarray:
        grad = np.zeros(self.n)
        for cols, vals in self._map(lambda b: b.gradient(x)):
            np.add.at(grad, cols, vals)
        return grad

    def constraints(self, x: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return np.zeros(0)
        return np.concatenate(self._map(lambda b: b.constraints(x)))

    def jacobian_values(self, x: np.ndarray) -> np.ndarray:
        if not len(self.jac_rows):
            return np.zeros(0)
        return np.concatenate(self._map(lambda b: b.jacobian(x)))

    def hessian_values(self, x: np.ndarray, lam: np.ndarray, obj_factor: float = 1.0) -> np.ndarray:
        if not len(self.hess_rows):
            return np.zeros(0)
        return np.concatenate(self._map(lambda b: b.hessian(x, lam, obj_factor)))


def eval_oracles(nlp: NlpProtocol, point: Sequence[float], mode: str,
                 multipliers: Sequence[float] | None = None):
    """Evaluate one oracle of ``nlp``.

    ``jacobian`` and ``hessian`` return ``(rows, cols, values)`` triplets;
    the Hessian is the lower triangle of the Lagrangian Hessian with
    objective factor 1 and constraint multipliers ``multipliers``.
    """
    x = np.asarray(point, dtype=float)
    if x.shape != (nlp.n,):
        raise ValueError(f"Point has dimension {x.shape}, expected ({nlp.n},)")
    if mode == "objective":
        return nlp.objective(x)
    if mode == "gradient":
        return nlp.gradient(x)
    if mode == "constraints":
        return nlp.constraints(x)
    if mode == "jacobian":
        return nlp.jac_rows, nlp.jac_cols, nlp.jacobian_values(x)
    if mode == "hessian":
        if multipliers is None:
            raise ValueError("hessian mode requires constraint multipliers")
        lam = np.asarray(multipliers, dtype=float)
        return nlp.hess_rows, nlp.hess_cols, nlp.hessian_values(x, lam, 1.0)
    raise ValueError(f"Invalid mode: {mode}. Must be one of {MODES}")


def flatten(graph: OptiGraph, threads: int = 1) -> StandardNLP:
    """Flatten ``graph`` into a :class:`StandardNLP`.

    Args:
        graph: Model to flatten; it is not modified.
        threads: Worker threads for per-node oracle evaluation.

    Returns:
        The flat problem, laid out node by node with slack columns after
        each node's variables and link rows after its inner rows.

    Raises:
        EmptyModel: ``graph`` has no variables.
    """
    if not graph.variables:
        raise EmptyModel(f"Model '{graph.name}' has no variables")

    by_node_vars: dict[int, list] = {node: [] for node in graph.nodes}
    for v in graph.variables:
        by_node_vars[v.node].append(v)
    by_node_cons: dict[int, list] = {node: [] for node in graph.nodes}
    for c in graph.constraints:
        by_node_cons[c.node].append(c)

    # column layout: node variables, then node slacks, node by node
    column_of: dict[int, int] = {}
    slack_of: dict[int, int] = {}
    row_of: dict[int, int] = {}
    lower, upper, names, col_nodes = [], [], [], []
    con_names, row_nodes = [], []
    layout = []
    col = 0
    row = 0
    for node in graph.nodes:
        cons = [c for c in by_node_cons[node] if not c.link] + [c for c in by_node_cons[node] if c.link]
        col_start = col
        for v in by_node_vars[node]:
            column_of[v.id] = col
            lower.append(v.lower)
            upper.append(v.upper)
            names.append(f"{v.name}")
            col_nodes.append(node)
            col += 1
        for c in cons:
            if c.sense != "==":
                slack_of[c.id] = col
                lower.append(0.0)
                upper.append(math.inf)
                names.append(f"slack[{c.name}]")
                col_nodes.append(node)
                col += 1
        row_start = row
        for c in cons:
            row_of[c.id] = row
            con_names.append(c.name)
            row_nodes.append(node)
            row += 1
        layout.append((node, range(col_start, col), range(row_start, row), cons))

    n, m = col, row
    x_start = np.zeros(n)
    for v in graph.variables:
        x_start[column_of[v.id]] = v.default_start()

    blocks: list[NodeBlock] = []
    U: dict[int, np.ndarray] = {}
    for node, columns, rows, cons in layout:
        objective_tapes = [Tape(t.body, column_of) for t in graph.objective if t.node == node]
        constraint_tapes = [Tape(c.body, column_of) for c in cons]
        slack_column = np.array([slack_of.get(c.id, -1) for c in cons], dtype=np.int64)
        slack_sign = np.array([1.0 if c.sense == "<=" else -1.0 for c in cons])
        rhs = np.array([c.rhs for c in cons])
        block = NodeBlock(node, columns, rows, objective_tapes, constraint_tapes,
                          rhs, slack_column, slack_sign)
        block.build_structure()
        blocks.append(block)
        U[node] = np.concatenate([np.arange(columns.start, columns.stop),
                                  n + np.arange(rows.start, rows.stop)]).astype(np.int64)

        # slack start: the residual that makes the row hold, clipped at zero
        ws = DerivativeWorkspace()
        for r, c in enumerate(cons):
            if slack_column[r] < 0:
                continue
            try:
                body = constraint_tapes[r].value(x_start, ws)
            except DomainError:
                body = c.rhs
            residual = (c.rhs - body) if c.sense == "<=" else (body - c.rhs)
            x_start[slack_column[r]] = max(residual, 0.0)

    nlp = StandardNLP(
        name=graph.name,
        n=n,
        m=m,
        x_lower=np.asarray(lower, dtype=float),
        x_upper=np.asarray(upper, dtype=float),
        x_start=x_start,
        var_names=names,
        con_names=con_names,
        node_ids=list(graph.nodes),
        U=U,
        blocks=blocks,
        column_of=column_of,
        row_of=row_of,
        node_of_column=np.asarray(col_nodes, dtype=np.int64),
        node_of_row=np.asarray(row_nodes, dtype=np.int64),
        jac_rows=_concat([b.jac_rows for b in blocks]),
        jac_cols=_concat([b.jac_cols for b in blocks]),
        hess_rows=_concat([b.hess_rows for b in blocks]),
        hess_cols=_concat([b.hess_cols for b in blocks]),
        threads=max(1, int(threads)),
        graph=graph.to_networkx(),
    )
    logger.debug("Flattened '%s': n=%d m=%d nodes=%d", graph.name, n, m, len(blocks))
    return nlp


def _concat(parts: list[np.ndarray]) -> np.ndarray:
    return np.concatenate(parts).astype(np.int64) if parts else np.zeros(0, dtype=np.int64)
