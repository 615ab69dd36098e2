"""The ``validate`` command: check a fixture or saved model and list gaps.

Errors make a file unusable; gaps are legal but probably unintended
(an isolated graph node, a network without deliveries, ...).
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import networkx as nx

from graphipm.errors import GraphIpmError, ParseError
from graphipm.instances.fixtures import parse_instance
from graphipm.instances.gas import GasInstance
from graphipm.io import load_json
from graphipm.model import OptiGraph
from graphipm.serialize import FORMAT_KIND, graph_from_dict


def graph_gaps(graph: OptiGraph) -> list[str]:
    gaps = []
    for node in graph.nodes:
        if not graph.node_variables(node):
            gaps.append(f"Node {node} has no variables")
    if len(graph.nodes) > 1 and not nx.is_connected(graph.to_networkx()):
        gaps.append("Problem graph is disconnected; subdomains will not exchange information")
    if not graph.objective:
        gaps.append("Model has no objective terms (feasibility problem)")
    return gaps


def instance_gaps(inst: Any) -> list[str]:
    gaps = []
    if isinstance(inst, GasInstance):
        if not inst.receipts:
            gaps.append("No receipts: the network has no supply")
        if not inst.demands:
            gaps.append("No demands: deliveries cannot earn revenue")
        if not any(j.fixed_density is not None for j in inst.junctions):
            gaps.append("No junction has a fixed density; the pressure level is not pinned")
    else:
        if not inst.storages:
            gaps.append("No storage units: periods are not coupled")
        free = [g.id for g in inst.generators if g.c1 == 0 and g.c2 == 0]
        if free:
            gaps.append(f"Generators without cost: {', '.join(free)}")
    return gaps


def validate_file(path: Path) -> dict[str, Any]:
    """Validate one JSON file.

    Args:
        path: Gas/power fixture or serialized OptiGraph.

    Returns:
        ``{"valid", "kind", "errors", "gaps", "summary"}``
    """
    result: dict[str, Any] = {"valid": False, "kind": None, "errors": [], "gaps": [], "summary": {}}
    try:
        data = load_json(path)
        kind = data.get("kind") if isinstance(data, dict) else None
        result["kind"] = kind
        if kind == FORMAT_KIND:
            graph = graph_from_dict(data)
            result["summary"] = graph.summary()
            result["gaps"] = graph_gaps(graph)
        else:
            inst = parse_instance(data)
            result["errors"] = inst.validate()
            result["summary"] = inst.counts()
            result["gaps"] = instance_gaps(inst)
    except ParseError as e:
        result["errors"].append(str(e))
    except GraphIpmError as e:
        result["errors"].append(f"{type(e).__name__}: {e}")
    result["valid"] = not result["errors"]
    return result


def format_report(path: Path, result: dict[str, Any]) -> str:
    lines = [f"File: {path}", f"Kind: {result['kind']}", f"Valid: {'yes' if result['valid'] else 'no'}"]
    if result["summary"]:
        lines.append("Summary: " + ", ".join(f"{k}={v}" for k, v in result["summary"].items()))
    if result["errors"]:
        lines.append("")
        lines.append("Errors:")
        lines.extend(f"  x {e}" for e in result["errors"])
    if result["gaps"]:
        lines.append("")
        lines.append("Gaps:")
        lines.extend(f"  - {g}" for g in result["gaps"])
    if result["valid"] and not result["gaps"]:
        lines.append("")
        lines.append("No errors or gaps")
    return "\n".join(lines)
