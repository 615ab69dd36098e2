"""OptiGraph: graph-structured NLP models.

Each node owns variables, objective terms and inner constraints. Link
constraints attached to node ``i`` may reference variables of the closed
neighbourhood ``N[i]`` (``i`` and its graph neighbours). Scoping is enforced
while the model is built, so a finished model never needs re-checking.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import networkx as nx

from graphipm.errors import DuplicateEdge, ScopeViolation, SelfLoop, UnknownNode
from graphipm.expr import Expr, ExprLike, as_expr, var

logger = logging.getLogger(__name__)

SENSES = {"==": "==", "=": "==", "<=": "<=", ">=": ">="}


@dataclass
class Variable:
    id: int
    node: int
    name: str
    lower: float = -math.inf
    upper: float = math.inf
    start: float | None = None

    def default_start(self) -> float:
        """Explicit start, else midpoint of finite bounds, else 1.0 clipped into the bounds."""
        if self.start is not None:
            return float(self.start)
        if math.isfinite(self.lower) and math.isfinite(self.upper):
            return 0.5 * (self.lower + self.upper)
        return min(max(1.0, self.lower), self.upper)


@dataclass
class Constraint:
    id: int
    node: int
    body: Expr
    sense: str
    rhs: float
    link: bool
    name: str


@dataclass
class ObjectiveTerm:
    node: int
    body: Expr


@dataclass
class OptiGraph:
    """Strictly ordered node set, undirected edges, per-node model data."""

    name: str = "optigraph"
    nodes: list[int] = field(default_factory=list)
    node_labels: dict[int, str] = field(default_factory=dict)
    edges: list[tuple[int, int]] = field(default_factory=list)
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: list[ObjectiveTerm] = field(default_factory=list)
    _neighbors: dict[int, set[int]] = field(default_factory=dict, repr=False)

    # structure

    def add_node(self, label: str | None = None) -> int:
        node = len(self.nodes) + 1
        self.nodes.append(node)
        self._neighbors[node] = set()
        if label is not None:
            self.node_labels[node] = label
        return node

    def add_edge(self, i: int, j: int) -> int:
        self._check_node(i)
        self._check_node(j)
        if i == j:
            raise SelfLoop(f"Edge {{{i},{j}}} is a self-loop")
        if j in self._neighbors[i]:
            raise DuplicateEdge(f"Edge {{{i},{j}}} already exists")
        self.edges.append((min(i, j), max(i, j)))
        self._neighbors[i].add(j)
        self._neighbors[j].add(i)
        return len(self.edges)

    def neighborhood(self, i: int) -> set[int]:
        """Closed neighbourhood N[i]."""
        self._check_node(i)
        return self._neighbors[i] | {i}

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.nodes)
        graph.add_edges_from(self.edges)
        return graph

    def _check_node(self, node: int) -> None:
        if node not in self._neighbors:
            raise UnknownNode(f"Unknown node: {node}")

    # model data

    def add_variable(self, node: int, lower: float | None = None, upper: float | None = None,
                     start: float | None = None, name: str | None = None) -> Expr:
        """Declare a variable owned by ``node``.

        Returns the variable-reference expression; its ``index`` is the
        variable id.
        """
        self._check_node(node)
        lower = -math.inf if lower is None else float(lower)
        upper = math.inf if upper is None else float(upper)
        if lower > upper:
            raise ValueError(f"Variable bounds are inverted: [{lower}, {upper}]")
        vid = len(self.variables)
        self.variables.append(Variable(vid, node, name or f"x{vid}", lower, upper, start))
        return var(vid)

    def add_constraint(self, node: int, body: ExprLike, sense: str = "==", rhs: float = 0.0,
                       name: str | None = None) -> int:
        """Inner constraint ``body (sense) rhs``; only node-local variables allowed."""
        self._check_node(node)
        body = as_expr(body)
        self._check_scope(body, {node}, f"inner constraint at node {node}")
        return self._append_constraint(node, body, sense, rhs, link=False, name=name)

    def add_link_constraint(self, node: int, body: ExprLike, rhs: float = 0.0,
                            name: str | None = None) -> int:
        """Link equality ``body == rhs`` owned by ``node``, scoped to N[node]."""
        self._check_node(node)
        body = as_expr(body)
        self._check_scope(body, self.neighborhood(node), f"link constraint at node {node}")
        return self._append_constraint(node, body, "==", rhs, link=True, name=name)

    def add_edge_link(self, i: int, j: int, body: ExprLike, rhs: float = 0.0,
                      name: str | None = None) -> int:
        """Link equality for edge {i, j}; owned by the lower-indexed endpoint."""
        self._check_node(i)
        self._check_node(j)
        if j not in self._neighbors[i]:
            raise ScopeViolation(f"No edge {{{i},{j}}} to carry a link constraint")
        return self.add_link_constraint(min(i, j), body, rhs, name)

    def add_objective_term(self, node: int, body: ExprLike) -> None:
        self._check_node(node)
        body = as_expr(body)
        self._check_scope(body, {node}, f"objective term at node {node}")
        self.objective.append(ObjectiveTerm(node, body))

    def _append_constraint(self, node, body, sense, rhs, link, name) -> int:
        if sense not in SENSES:
            raise ValueError(f"Invalid constraint sense: {sense}. Must be one of {sorted(SENSES)}")
        cid = len(self.constraints)
        self.constraints.append(Constraint(cid, node, body, SENSES[sense], float(rhs), link, name or f"c{cid}"))
        return cid

    def _check_scope(self, body: Expr, allowed: set[int], what: str) -> None:
        for vid in body.variables():
            if vid < 0 or vid >= len(self.variables):
                raise ScopeViolation(f"{what} references undeclared variable {vid}")
            owner = self.variables[vid].node
            if owner not in allowed:
                raise ScopeViolation(
                    f"{what} references variable '{self.variables[vid].name}' of node {owner}"
                )

    # summaries

    def node_variables(self, node: int) -> list[Variable]:
        return [v for v in self.variables if v.node == node]

    def node_constraints(self, node: int) -> list[Constraint]:
        """Inner constraints first, then link constraints, each in creation order."""
        own = [c for c in self.constraints if c.node == node]
        return [c for c in own if not c.link] + [c for c in own if c.link]

    def summary(self) -> dict[str, int]:
        return {
            "nodes": len(self.nodes),
            "edges": len(self.edges),
            "variables": len(self.variables),
            "constraints": len(self.constraints),
            "link_constraints": sum(1 for c in self.constraints if c.link),
            "inequalities": sum(1 for c in self.constraints if c.sense != "=="),
        }
