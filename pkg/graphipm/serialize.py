"""OptiGraph <-> JSON.

Expressions are stored once in a table. Each entry is a prefix-notation
list ``[op, *args]`` whose expression arguments are integer references to
earlier entries, so shared subexpressions stay shared after a round trip:

    ["const", 2.0]           constant
    ["var", 7]               variable id 7
    ["powi", 3, 4]           entry 4 raised to the 3rd power
    ["mul", 0, 5]            entry 0 times entry 5

See ``schemas/optigraph.schema.json``.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any

from graphipm.errors import GraphIpmError, ParseError
from graphipm.expr import BINARY_OPS, UNARY_OPS, Expr, topological_order
from graphipm.io import atomic_write_json, bound_from_json, bound_to_json, load_json
from graphipm.model import OptiGraph

FORMAT_KIND = "optigraph"
FORMAT_VERSION = 1


class _ExprTable:
    def __init__(self):
        self.entries: list[list[Any]] = []
        self.index: dict[int, int] = {}

    def add(self, root: Expr) -> int:
        for node in topological_order(root):
            if id(node) in self.index:
                continue
            if node.kind == "const":
                entry = ["const", node.value]
            elif node.kind == "var":
                entry = ["var", node.index]
            elif node.op == "powi":
                entry = ["powi", node.power, self.index[id(node.children[0])]]
            else:
                entry = [node.op] + [self.index[id(c)] for c in node.children]
            self.index[id(node)] = len(self.entries)
            self.entries.append(entry)
        return self.index[id(root)]


def graph_to_dict(graph: OptiGraph) -> dict[str, Any]:
    table = _ExprTable()
    constraints = [
        {
            "node": c.node,
            "name": c.name,
            "link": c.link,
            "sense": c.sense,
            "rhs": c.rhs,
            "body": table.add(c.body),
        }
        for c in graph.constraints
    ]
    objective = [{"node": t.node, "body": table.add(t.body)} for t in graph.objective]
    return {
        "kind": FORMAT_KIND,
        "version": FORMAT_VERSION,
        "name": graph.name,
        "nodes": [
            {"id": node, "label": graph.node_labels.get(node)} for node in graph.nodes
        ],
        "edges": [list(e) for e in graph.edges],
        "variables": [
            {
                "node": v.node,
                "name": v.name,
                "lower": bound_to_json(v.lower),
                "upper": bound_to_json(v.upper),
                "start": v.start,
            }
            for v in graph.variables
        ],
        "expressions": table.entries,
        "constraints": constraints,
        "objective": objective,
    }


def _decode_expressions(entries: Any) -> list[Expr]:
    if not isinstance(entries, list):
        raise ParseError("Expected a list", field="expressions")
    built: list[Expr] = []

    def ref(value: Any, where: str) -> Expr:
        if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < len(built):
            raise ParseError(f"Invalid back-reference {value!r}", field=where)
        return built[value]

    for k, entry in enumerate(entries):
        where = f"expressions[{k}]"
        if not isinstance(entry, list) or not entry:
            raise ParseError("Expected a non-empty list", field=where)
        op, args = entry[0], entry[1:]
        if op == "const" and len(args) == 1 and isinstance(args[0], (int, float)):
            built.append(Expr("const", value=float(args[0])))
        elif op == "var" and len(args) == 1 and isinstance(args[0], int):
            built.append(Expr("var", index=args[0]))
        elif op == "powi" and len(args) == 2 and isinstance(args[0], int):
            built.append(Expr("unary", "powi", (ref(args[1], where),), power=args[0]))
        elif op in UNARY_OPS and op != "powi" and len(args) == 1:
            built.append(Expr("unary", op, (ref(args[0], where),)))
        elif op in BINARY_OPS and len(args) == 2:
            built.append(Expr("binary", op, (ref(args[0], where), ref(args[1], where))))
        else:
            raise ParseError(f"Malformed expression entry {entry!r}", field=where)
    return built


def _require(obj: dict, key: str, where: str) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"Missing required field: {key}", field=f"{where}.{key}" if where else key)
    return obj[key]


def graph_from_dict(data: Any) -> OptiGraph:
    """Rebuild a model through the modeling API, so scoping is re-checked."""
    if not isinstance(data, dict):
        raise ParseError("Model document must be a JSON object")
    if data.get("kind") != FORMAT_KIND:
        raise ParseError(f"Expected kind '{FORMAT_KIND}', got {data.get('kind')!r}", field="kind")
    if data.get("version") != FORMAT_VERSION:
        raise ParseError(f"Unsupported version {data.get('version')!r}", field="version")

    graph = OptiGraph(name=str(data.get("name", "optigraph")))
    try:
        for k, node in enumerate(_require(data, "nodes", "")):
            nid = graph.add_node(node.get("label") if isinstance(node, dict) else None)
            if isinstance(node, dict) and node.get("id", nid) != nid:
                raise ParseError(f"Node ids must be 1..N in order, got {node.get('id')}",
                                 field=f"nodes[{k}].id")
        for k, edge in enumerate(_require(data, "edges", "")):
            if not isinstance(edge, list) or len(edge) != 2:
                raise ParseError("Edge must be a pair of node ids", field=f"edges[{k}]")
            graph.add_edge(int(edge[0]), int(edge[1]))
        for k, v in enumerate(_require(data, "variables", "")):
            where = f"variables[{k}]"
            graph.add_variable(
                int(_require(v, "node", where)),
                bound_from_json(v.get("lower"), -math.inf, f"{where}.lower"),
                bound_from_json(v.get("upper"), math.inf, f"{where}.upper"),
                v.get("start"),
                v.get("name"),
            )
        exprs = _decode_expressions(_require(data, "expressions", ""))

        def body(obj: dict, where: str) -> Expr:
            idx = _require(obj, "body", where)
            if isinstance(idx, bool) or not isinstance(idx, int) or not 0 <= idx < len(exprs):
                raise ParseError(f"Invalid expression reference {idx!r}", field=f"{where}.body")
            return exprs[idx]

        for k, c in enumerate(_require(data, "constraints", "")):
            where = f"constraints[{k}]"
            node = int(_require(c, "node", where))
            if c.get("link", False):
                graph.add_link_constraint(node, body(c, where), float(c.get("rhs", 0.0)), c.get("name"))
            else:
                graph.add_constraint(node, body(c, where), c.get("sense", "=="),
                                     float(c.get("rhs", 0.0)), c.get("name"))
        for k, t in enumerate(_require(data, "objective", "")):
            where = f"objective[{k}]"
            graph.add_objective_term(int(_require(t, "node", where)), body(t, where))
    except ParseError:
        raise
    except (GraphIpmError, ValueError, TypeError, AttributeError) as e:
        raise ParseError(f"Invalid model: {e}") from e
    return graph


def write_graph(graph: OptiGraph, path: Path) -> Path:
    return atomic_write_json(path, graph_to_dict(graph))


def read_graph(path: Path) -> OptiGraph:
    return graph_from_dict(load_json(path))
