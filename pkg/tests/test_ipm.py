"""Filter line-search interior-point solver."""

import json
import re

import numpy as np
import pytest

from conftest import assert_derivatives, chain_graph, interior_points
from graphipm.errors import ParseError, RestorationFailure
from graphipm.expr import log
from graphipm.ipm import (
    LOG_HEADER,
    Filter,
    IpmOptions,
    IpmState,
    RestorationNLP,
    curvature_test,
    filter_accept,
    fraction_to_boundary,
    gradient_scaling,
    restoration,
    solve,
    update_barrier,
)
from graphipm.ipm.solver import push_into_bounds
from graphipm.linalg import LinearSolverOptions
from graphipm.model import OptiGraph
from graphipm.nlp import PrimalDualPoint, flatten

LINE = re.compile(r"^\s*\d+r? [+-]\d\.\d{8}e[+-]\d{2} ")


def single_node(build):
    graph = OptiGraph()
    node = graph.add_node()
    build(graph, node)
    return flatten(graph)


class TestOptions:

    def test_defaults(self):
        opts = IpmOptions()
        assert (opts.tol, opts.max_iter, opts.mu_init) == (1e-8, 500, 0.1)
        assert (opts.kappa_mu, opts.theta_mu, opts.tau_min) == (0.2, 1.5, 0.99)

    def test_from_mapping(self):
        opts = IpmOptions.from_mapping({"tol": 1e-6, "max_iter": 40, "scaling": False})
        assert opts.tol == 1e-6 and opts.max_iter == 40 and opts.scaling is False

    def test_unknown_key(self):
        with pytest.raises(ParseError) as info:
            IpmOptions.from_mapping({"tolerance": 1e-6})
        assert info.value.field == "tolerance"

    @pytest.mark.parametrize("data", [{"max_iter": 2.5}, {"scaling": 1}, {"tol": "small"}, {"tol": True}])
    def test_wrong_types(self, data):
        with pytest.raises(ParseError):
            IpmOptions.from_mapping(data)

    def test_out_of_range_value(self):
        with pytest.raises(ParseError):
            IpmOptions.from_mapping({"kappa_mu": 1.5})

    def test_from_file(self, tmp_path):
        path = tmp_path / "options.json"
        path.write_text(json.dumps({"mu_init": 0.5}))
        assert IpmOptions.from_file(path).mu_init == 0.5


class TestFilter:

    def test_entries_block_with_margins(self):
        flt = Filter(gamma_theta=0.1, gamma_phi=0.1)
        flt.add(1.0, 5.0)
        assert flt.dominated(0.95, 4.95)
        assert not flt.dominated(0.85, 6.0)
        assert not flt.dominated(2.0, 4.85)

    def test_add_drops_dominated_entries(self):
        flt = Filter()
        flt.add(2.0, 2.0)
        flt.add(3.0, 1.0)
        flt.add(1.0, 0.5)
        assert flt.entries == [(1.0, 0.5)]
        flt.add(4.0, 4.0)
        assert len(flt) == 1

    def test_theta_max(self):
        assert Filter(theta_max=10.0).dominated(10.0, -1e9)

    def test_sufficient_decrease_in_violation(self):
        flt = Filter()
        ok, armijo = filter_accept(flt, 1.0, 0.0, 0.5, 0.1, alpha=1.0, grad_phi_dx=1.0, theta_min=1e-4)
        assert ok and not armijo

    def test_armijo_when_nearly_feasible(self):
        flt = Filter()
        ok, armijo = filter_accept(flt, 1e-6, 1.0, 1e-6, 0.5, alpha=1.0, grad_phi_dx=-1.0, theta_min=1e-4)
        assert ok and armijo
        ok, _ = filter_accept(flt, 1e-6, 1.0, 1e-6, 1.0, alpha=1.0, grad_phi_dx=-1.0, theta_min=1e-4)
        assert not ok


class TestBuildingBlocks:

    def test_update_barrier(self):
        assert update_barrier(0.1) == pytest.approx(0.02)
        assert update_barrier(1e-2) == pytest.approx(1e-3)
        assert update_barrier(1e-9, tol=1e-8) == pytest.approx(1e-9)
        with pytest.raises(ValueError):
            update_barrier(0.0)

    def test_curvature_test(self):
        W = np.array([[1.0, 0.0], [0.0, -2.0]])
        sigma = np.zeros(2)
        assert curvature_test(np.array([1.0, 0.0]), W, sigma, 0.0)
        assert not curvature_test(np.array([0.0, 1.0]), W, sigma, 0.0)
        assert curvature_test(np.array([0.0, 1.0]), W, sigma, 3.0)
        assert curvature_test(np.zeros(2), W, sigma, 0.0)

    def test_fraction_to_boundary(self):
        nlp = single_node(lambda g, n: g.add_objective_term(n, g.add_variable(n, lower=0.0, start=1.0)))
        point = PrimalDualPoint(np.array([1.0]), np.zeros(0), np.array([1.0]), np.zeros(1))
        alpha_pr, alpha_du = fraction_to_boundary(nlp, point, np.array([-2.0]), np.array([-4.0]),
                                                  np.zeros(1), 0.995)
        assert alpha_pr == pytest.approx(0.4975)
        assert alpha_du == pytest.approx(0.995 / 4.0)
        full, _ = fraction_to_boundary(nlp, point, np.array([3.0]), np.zeros(1), np.zeros(1), 0.995)
        assert full == 1.0

    def test_push_into_bounds(self):
        lower = np.array([0.0, -np.inf, 0.0, 10.0])
        upper = np.array([np.inf, 1.0, 1.0, 10.5])
        x = push_into_bounds(np.array([0.0, 5.0, 1.0, 10.0]), lower, upper)
        np.testing.assert_allclose(x, [0.01, 0.99, 0.99, 10.005])
        assert np.all((x > lower) & (x < upper))


class TestSolve:

    def test_bounded_quadratic(self):
        def build(graph, node):
            x = graph.add_variable(node, lower=0.0, start=0.1)
            graph.add_objective_term(node, (x - 2.0) ** 2)
        point, report = solve(single_node(build))
        assert report.status == "optimal"
        assert point.x[0] == pytest.approx(2.0, abs=1e-6)
        assert report.objective == pytest.approx(0.0, abs=1e-10)

    def test_active_bound(self):
        def build(graph, node):
            x = graph.add_variable(node, lower=0.0, start=1.0)
            graph.add_objective_term(node, (x + 1.0) ** 2)
        point, report = solve(single_node(build))
        assert report.status == "optimal"
        assert point.x[0] == pytest.approx(0.0, abs=1e-6)
        assert point.z_lower[0] == pytest.approx(2.0, abs=1e-5)

    def test_hyperbola(self):
        def build(graph, node):
            x1 = graph.add_variable(node, lower=0.0, start=2.0)
            x2 = graph.add_variable(node, lower=0.0, start=0.25)
            graph.add_constraint(node, x1 * x2, "==", 1.0)
            graph.add_objective_term(node, x1 + x2)
        point, report = solve(single_node(build))
        assert report.status == "optimal"
        assert report.iterations <= 50
        np.testing.assert_allclose(point.x, [1.0, 1.0], atol=1e-7)
        assert report.objective == pytest.approx(2.0, abs=1e-7)

    def test_infeasible_bounds_end_in_restoration_failure(self):
        def build(graph, node):
            x = graph.add_variable(node, 0.0, 1.0, start=0.5)
            graph.add_constraint(node, x, "==", 3.0)
            graph.add_objective_term(node, x * x)
        _, report = solve(single_node(build))
        assert report.status == "restoration_failure"
        assert report.restorations == 0

    def test_restoration_drives_violation_to_the_nearest_bound(self):
        def build(graph, node):
            x = graph.add_variable(node, 0.0, 1.0, start=0.0)
            graph.add_constraint(node, x, "==", 3.0)
            graph.add_objective_term(node, x * x)
        point, report = solve(single_node(build))
        assert report.status == "restoration_failure"
        assert point.x[0] == pytest.approx(1.0, abs=1e-5)

    def test_hs071(self):
        def build(graph, node):
            x1, x2, x3, x4 = (graph.add_variable(node, 1.0, 5.0, start=s) for s in (1.0, 5.0, 5.0, 1.0))
            graph.add_constraint(node, x1 * x2 * x3 * x4, ">=", 25.0)
            graph.add_constraint(node, x1 * x1 + x2 * x2 + x3 * x3 + x4 * x4, "==", 40.0)
            graph.add_objective_term(node, x1 * x4 * (x1 + x2 + x3) + x3)
        point, report = solve(single_node(build))
        assert report.status == "optimal"
        assert report.objective == pytest.approx(17.0140173, abs=1e-6)
        np.testing.assert_allclose(point.x[:4], [1.0, 4.7429994, 3.8211503, 1.3794082], atol=1e-5)

    def test_max_iter(self):
        _, report = solve(flatten(chain_graph(3)), IpmOptions(max_iter=1))
        assert report.status == "max_iter" and report.iterations == 1

    def test_failed_start_evaluation(self):
        def build(graph, node):
            x = graph.add_variable(node, start=-1.0)
            graph.add_objective_term(node, log(x))
        _, report = solve(single_node(build))
        assert report.status == "trial_point_failure"

    @pytest.mark.parametrize("linear", [LinearSolverOptions(),
                                        LinearSolverOptions(kind="ras", iterator="gmres", K=3),
                                        LinearSolverOptions(kind="ras", iterator="richardson", K=3)])
    def test_chain_to_optimality(self, linear):
        point, report = solve(flatten(chain_graph(6)), linear=linear)
        assert report.status == "optimal"
        assert report.kkt_error <= 1e-8
        assert report.primal_infeasibility <= 1e-8

    def test_strategies_agree(self):
        nlp = flatten(chain_graph(6, cycle=True))
        direct, _ = solve(nlp)
        ras, _ = solve(nlp, linear=LinearSolverOptions(kind="ras", K=3, omega=1))
        np.testing.assert_allclose(ras.x, direct.x, atol=1e-6)

    def test_thread_count_is_invisible(self):
        runs = []
        for threads in (1, 4):
            nlp = flatten(chain_graph(8), threads=threads)
            runs.append(solve(nlp, linear=LinearSolverOptions(kind="ras", K=4, threads=threads)))
        (p1, r1), (p4, r4) = runs
        np.testing.assert_array_equal(p1.x, p4.x)
        assert r1.log_lines == r4.log_lines

    def test_log_format(self):
        _, report = solve(flatten(chain_graph(3)))
        assert report.log_lines[0] == LOG_HEADER
        assert len(report.log_lines) == report.iterations + 2
        for line in report.log_lines[1:]:
            assert LINE.match(line), line
        assert report.log_lines[1].split()[0] == "0"

    def test_report_dict(self):
        _, report = solve(flatten(chain_graph(3)))
        data = report.as_dict()
        assert data["status"] == "optimal" and report.success
        assert set(data["times"]) == {"total", "function_evaluation", "linear_solve", "other"}
        assert data["times"]["total"] >= data["times"]["function_evaluation"]


class TestRestoration:

    @pytest.fixture
    def nlp(self):
        def build(graph, node):
            x = graph.add_variable(node, 0.0, 1.0, start=0.9)
            y = graph.add_variable(node, 0.0, 1.0, start=0.9)
            graph.add_constraint(node, x + y, "==", 0.4)
            graph.add_objective_term(node, (x - 1.0) ** 2 + (y - 1.0) ** 2)
        return single_node(build)

    def state(self, nlp, mu=0.1):
        x = nlp.x_start.copy()
        return IpmState(
            point=PrimalDualPoint(x, np.zeros(nlp.m), mu / (x - nlp.x_lower), mu / (nlp.x_upper - x)),
            mu=mu, tau=0.99, filter=Filter(), theta_min=1e-4, theta_max=1e4,
        )

    def test_elastic_start_is_feasible(self, nlp):
        rnlp = RestorationNLP(nlp, nlp.x_start, 0.1)
        _, p, n_el = rnlp.split(rnlp.x_start)
        assert np.all(p > 0) and np.all(n_el > 0)
        np.testing.assert_allclose(rnlp.constraints(rnlp.x_start), 0.0, atol=1e-12)
        assert rnlp.violation(rnlp.x_start) == pytest.approx(1.4)

    def test_elastic_derivatives(self, nlp, rng):
        rnlp = RestorationNLP(nlp, nlp.x_start, 0.1)
        for point in interior_points(rnlp, rng, 3):
            assert_derivatives(rnlp, point, rng.normal(size=rnlp.m))

    def test_reduces_violation(self, nlp):
        state = self.state(nlp)
        before = float(np.abs(nlp.constraints(state.point.x)).sum())
        state = restoration(state, nlp, IpmOptions())
        after = float(np.abs(nlp.constraints(state.point.x)).sum())
        assert after <= 0.9 * before
        np.testing.assert_array_equal(state.point.lam, 0.0)
        assert np.all(state.point.x > 0.0) and np.all(state.point.x < 1.0)

    def test_failure(self):
        def build(graph, node):
            x = graph.add_variable(node, 0.0, 1.0, start=0.999)
            graph.add_constraint(node, x, "==", 3.0)
            graph.add_objective_term(node, x)
        nlp = single_node(build)
        with pytest.raises(RestorationFailure):
            restoration(self.state(nlp), nlp, IpmOptions())


def test_gradient_scaling():
    def build(graph, node):
        x = graph.add_variable(node, start=1.0)
        graph.add_constraint(node, 1e4 * x, "<=", 5.0)
        graph.add_objective_term(node, 1e3 * x * x)
    nlp = single_node(build)
    scaled = gradient_scaling(nlp, nlp.x_start, 100.0)
    assert scaled.obj_scale == pytest.approx(100.0 / 2e3)
    np.testing.assert_allclose(scaled.con_scale, [1e-2])
    x = np.array([0.3, 0.1])
    assert scaled.objective(x) == pytest.approx(scaled.obj_scale * nlp.objective(x))
    lam, z_l, _ = scaled.unscale_multipliers(np.array([2.0]), np.array([0.0, 4.0]), np.zeros(2))
    np.testing.assert_allclose(lam, [2.0 * 1e-2 / scaled.obj_scale])
    np.testing.assert_allclose(z_l, [0.0, 4.0 / scaled.obj_scale])
