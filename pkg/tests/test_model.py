"""OptiGraph construction and scoping rules."""

import math

import pytest

from graphipm.errors import DuplicateEdge, ScopeViolation, SelfLoop, UnknownNode
from graphipm.model import OptiGraph


@pytest.fixture
def triangle_path():
    graph = OptiGraph(name="path")
    for label in ("a", "b", "c"):
        graph.add_node(label)
    graph.add_edge(1, 2)
    graph.add_edge(2, 3)
    return graph


class TestStructure:

    def test_node_ids_are_sequential(self):
        graph = OptiGraph()
        assert [graph.add_node() for _ in range(3)] == [1, 2, 3]

    def test_edges_are_normalized(self, triangle_path):
        triangle_path.add_edge(3, 1)
        assert triangle_path.edges[-1] == (1, 3)

    def test_self_loop(self, triangle_path):
        with pytest.raises(SelfLoop):
            triangle_path.add_edge(2, 2)

    def test_duplicate_edge_either_direction(self, triangle_path):
        with pytest.raises(DuplicateEdge):
            triangle_path.add_edge(2, 1)

    def test_unknown_node(self, triangle_path):
        with pytest.raises(UnknownNode):
            triangle_path.add_edge(1, 9)
        with pytest.raises(UnknownNode):
            triangle_path.add_variable(4)

    def test_neighborhood_is_closed(self, triangle_path):
        assert triangle_path.neighborhood(2) == {1, 2, 3}
        assert triangle_path.neighborhood(1) == {1, 2}

    def test_networkx_view(self, triangle_path):
        g = triangle_path.to_networkx()
        assert sorted(g.nodes) == [1, 2, 3]
        assert g.has_edge(2, 3) and not g.has_edge(1, 3)


class TestVariables:

    def test_default_bounds_are_infinite(self, triangle_path):
        x = triangle_path.add_variable(1)
        v = triangle_path.variables[x.index]
        assert v.lower == -math.inf and v.upper == math.inf

    def test_inverted_bounds(self, triangle_path):
        with pytest.raises(ValueError):
            triangle_path.add_variable(1, 2.0, 1.0)

    def test_default_start(self, triangle_path):
        a = triangle_path.add_variable(1, 0.0, 4.0)
        b = triangle_path.add_variable(1, 3.0)
        c = triangle_path.add_variable(1, upper=-2.0)
        d = triangle_path.add_variable(1, 0.0, 4.0, start=3.5)
        starts = [triangle_path.variables[e.index].default_start() for e in (a, b, c, d)]
        assert starts == [2.0, 3.0, -2.0, 3.5]


class TestScoping:

    def test_inner_constraint_must_be_local(self, triangle_path):
        x1 = triangle_path.add_variable(1)
        x2 = triangle_path.add_variable(2)
        with pytest.raises(ScopeViolation):
            triangle_path.add_constraint(1, x1 + x2, "==", 0.0)

    def test_link_constraint_within_neighborhood(self, triangle_path):
        x1 = triangle_path.add_variable(1)
        x2 = triangle_path.add_variable(2)
        x3 = triangle_path.add_variable(3)
        cid = triangle_path.add_link_constraint(2, x1 + x2 + x3, 1.0)
        assert triangle_path.constraints[cid].link

    def test_link_constraint_outside_neighborhood(self, triangle_path):
        x1 = triangle_path.add_variable(1)
        x3 = triangle_path.add_variable(3)
        with pytest.raises(ScopeViolation):
            triangle_path.add_link_constraint(1, x1 - x3)

    def test_edge_link_owned_by_lower_endpoint(self, triangle_path):
        x2 = triangle_path.add_variable(2)
        x3 = triangle_path.add_variable(3)
        cid = triangle_path.add_edge_link(3, 2, x2 - x3)
        assert triangle_path.constraints[cid].node == 2

    def test_edge_link_requires_edge(self, triangle_path):
        x1 = triangle_path.add_variable(1)
        x3 = triangle_path.add_variable(3)
        with pytest.raises(ScopeViolation):
            triangle_path.add_edge_link(1, 3, x1 - x3)

    def test_objective_term_must_be_local(self, triangle_path):
        x1 = triangle_path.add_variable(1)
        x2 = triangle_path.add_variable(2)
        with pytest.raises(ScopeViolation):
            triangle_path.add_objective_term(1, x1 * x2)

    def test_invalid_sense(self, triangle_path):
        x1 = triangle_path.add_variable(1)
        with pytest.raises(ValueError):
            triangle_path.add_constraint(1, x1, "<", 0.0)


def test_node_constraints_put_links_last(triangle_path):
    x1 = triangle_path.add_variable(1)
    x2 = triangle_path.add_variable(2)
    triangle_path.add_link_constraint(2, x1 - x2, name="link")
    triangle_path.add_constraint(2, x2, "<=", 3.0, name="cap")
    assert [c.name for c in triangle_path.node_constraints(2)] == ["cap", "link"]


def test_summary(triangle_path):
    x1 = triangle_path.add_variable(1, 0.0)
    x2 = triangle_path.add_variable(2)
    triangle_path.add_constraint(1, x1, ">=", 1.0)
    triangle_path.add_edge_link(1, 2, x1 - x2)
    triangle_path.add_objective_term(1, x1 * x1)
    assert triangle_path.summary() == {
        "nodes": 3, "edges": 2, "variables": 2, "constraints": 2,
        "link_constraints": 1, "inequalities": 1,
    }
