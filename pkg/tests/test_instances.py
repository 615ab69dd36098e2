"""Gas network and multi-period power flow generators."""

import dataclasses

import networkx as nx
import pytest

from conftest import assert_derivatives, interior_points
from graphipm.errors import InvalidHorizon
from graphipm.instances import build_gas, build_power, bundled_fixture, load_fixture
from graphipm.instances.gas import GAS_BOUND_TAGS, GAS_ROW_TAGS, Compressor, discretize
from graphipm.instances.power import POWER_BOUND_TAGS, POWER_ROW_TAGS
from graphipm.nlp import flatten


@pytest.fixture(scope="module")
def gas():
    return load_fixture(bundled_fixture("gas"))


@pytest.fixture(scope="module")
def power():
    return load_fixture(bundled_fixture("power"))


def link_rows_by_owner(graph):
    """(owner, referenced nodes) for every link row."""
    owner_of = {v.id: v.node for v in graph.variables}
    return [(c.node, {owner_of[k] for k in c.body.variables()}) for c in graph.constraints if c.link]


class TestGas:

    def test_fixture_counts(self, gas):
        assert gas.counts() == {"junctions": 6, "pipes": 4, "compressors": 2, "receipts": 1, "demands": 3}

    def test_discretization(self, gas):
        junctions, segments = discretize(gas, 8)
        assert len(segments) == 32
        assert len(junctions) == 6 + 4 * 7
        p4 = [s for s in segments if s.pipe == "P4"]
        assert [s.id for s in p4[:2]] == ["P4.1", "P4.2"]
        assert p4[0].start == "J4" and p4[-1].end == "J6"
        assert sum(s.length for s in p4) == pytest.approx(5.0)
        assert sum(s.lhat for s in p4) == pytest.approx(4.5)

    def test_invalid_segments(self, gas):
        with pytest.raises(ValueError):
            discretize(gas, 0)

    def test_horizon_is_a_cycle(self, gas):
        graph = build_gas(gas, 24, 1)
        g = graph.to_networkx()
        assert g.number_of_nodes() == 24 and g.number_of_edges() == 24
        assert nx.is_isomorphic(g, nx.cycle_graph(24))

    def test_two_periods_form_a_single_edge(self, two_junction_gas):
        g = build_gas(two_junction_gas, 2).to_networkx()
        assert list(g.edges) == [(1, 2)]

    def test_short_horizon(self, gas):
        with pytest.raises(InvalidHorizon):
            build_gas(gas, 1)

    def test_hand_count(self, two_junction_gas):
        graph = build_gas(two_junction_gas, 2)
        summary = graph.summary()
        assert summary["variables"] == 12
        assert summary["constraints"] - summary["link_constraints"] == 6
        assert summary["link_constraints"] == 2
        assert summary["inequalities"] == 0
        nlp = flatten(graph)
        assert (nlp.n, nlp.m) == (12, 8)

    def test_momentum_residual(self, two_junction_gas):
        nlp = flatten(build_gas(two_junction_gas, 2))
        x = nlp.x_start.copy()
        index = {name: k for k, name in enumerate(nlp.var_names)}
        x[index["rho[A,1]"]] = 1.2
        x[index["rho[B,1]"]] = 0.9
        x[index["phi_avg[P.1,1]"]] = -3.0
        row = nlp.con_names.index("momentum[P.1,1]")
        expected = 1.2 ** 2 - 0.9 ** 2 + 0.01 * 2.0 / 1.0 * (-9.0)
        assert nlp.constraints(x)[row] == pytest.approx(expected)

    def test_linepack_wraps_to_last_period(self, two_junction_gas):
        nlp = flatten(build_gas(two_junction_gas, 3))
        index = {name: k for k, name in enumerate(nlp.var_names)}
        x = nlp.x_start.copy()
        x[index["rho[A,3]"]] = 1.0
        x[index["rho[B,3]"]] = 1.0
        x[index["rho[A,1]"]] = 1.25
        x[index["rho[B,1]"]] = 1.5
        x[index["phi_neg[P.1,1]"]] = 0.1
        row = nlp.con_names.index("linepack[P.1,1]")
        assert nlp.constraints(x)[row] == pytest.approx(2.0 * (0.25 + 0.5) + 0.4)

    def test_links_owned_by_lower_endpoint(self, gas):
        graph = build_gas(gas, 4, 1)
        rows = link_rows_by_owner(graph)
        assert rows
        for owner, touched in rows:
            assert owner == min(touched)
            assert len(touched) == 2
        assert any(owner == 1 and touched == {1, 4} for owner, touched in rows)
        assert {owner for owner, _ in rows} == {1, 2, 3}

    def test_compressor_rows(self, two_junction_gas):
        inst = dataclasses.replace(
            two_junction_gas,
            compressors=[Compressor("C", "A", "B", power_max=5.0, flow_max=5.0)],
        )
        names = flatten(build_gas(inst, 2)).con_names
        for tag in ("direction[C,1]", "boost[C,1]", "compressor_power[C,1]"):
            assert tag in names

    def test_every_row_tag_is_emitted(self, gas):
        graph = build_gas(gas, 3, 1)
        assert {c.name.split("[")[0] for c in graph.constraints} == set(GAS_ROW_TAGS.values())
        assert set(GAS_BOUND_TAGS.values()) <= {v.name.split("[")[0] for v in graph.variables}

    def test_derivatives(self, gas, rng):
        nlp = flatten(build_gas(gas, 4, 1))
        for point in interior_points(nlp, rng, 2):
            assert_derivatives(nlp, point, rng.normal(size=nlp.m), rtol=1e-5, atol=1e-5)


class TestPower:

    def test_fixture_counts(self, power):
        assert power.counts() == {"buses": 14, "generators": 5, "branches": 20, "storages": 1}

    def test_horizon_is_a_path(self, power):
        g = build_power(power, 8).to_networkx()
        assert nx.is_isomorphic(g, nx.path_graph(8))

    def test_short_horizon(self, power):
        with pytest.raises(InvalidHorizon):
            build_power(power, 1)

    def test_per_period_structure(self, power):
        graph = build_power(power, 2)
        per_period = [v for v in graph.variables if v.node == 1]
        # vm, va, pg, qg, four branch flows, six storage variables
        assert len(per_period) == 2 * 14 + 2 * 5 + 4 * 20 + 6
        links = [c for c in graph.constraints if c.link]
        assert [c.name for c in links] == ["storage_energy[S1,2]"]
        assert all(c.node == 1 for c in links)

    def test_links_owned_by_lower_endpoint(self, power):
        graph = build_power(power, 3)
        rows = link_rows_by_owner(graph)
        assert [touched for _, touched in rows] == [{1, 2}, {2, 3}]
        assert [owner for owner, _ in rows] == [1, 2]

    def test_initial_energy_row(self, power):
        nlp = flatten(build_power(power, 2))
        index = {name: k for k, name in enumerate(nlp.var_names)}
        x = nlp.x_start.copy()
        x[index["energy[S1,1]"]] = 0.3
        x[index["charge[S1,1]"]] = 0.1
        x[index["discharge[S1,1]"]] = 0.0
        row = nlp.con_names.index("storage_energy[S1,1]")
        assert nlp.constraints(x)[row] == pytest.approx(0.3 - 0.95 * 0.1 - 0.2)

    def test_storage_injection_sign(self, power):
        nlp = flatten(build_power(power, 2))
        index = {name: k for k, name in enumerate(nlp.var_names)}
        x = nlp.x_start.copy()
        x[index["ps[S1,1]"]] = 0.05
        x[index["charge[S1,1]"]] = 0.0
        x[index["discharge[S1,1]"]] = 0.05
        row = nlp.con_names.index("storage_p[S1,1]")
        assert nlp.constraints(x)[row] == pytest.approx(0.0)

    def test_storage_loss_reduces_injection(self, power):
        lossy = dataclasses.replace(power, storages=[dataclasses.replace(s, loss=0.01) for s in power.storages])
        nlp = flatten(build_power(lossy, 2))
        index = {name: k for k, name in enumerate(nlp.var_names)}
        x = nlp.x_start.copy()
        x[index["ps[S1,1]"]] = 0.04
        x[index["charge[S1,1]"]] = 0.0
        x[index["discharge[S1,1]"]] = 0.05
        row = nlp.con_names.index("storage_p[S1,1]")
        assert nlp.constraints(x)[row] == pytest.approx(0.0, abs=1e-12)
        x[index["ps[S1,1]"]] = 0.05
        assert nlp.constraints(x)[row] == pytest.approx(0.01)

    def test_load_profile_cycles(self, power):
        graph = build_power(power, 26)
        assert graph.summary()["nodes"] == 26

    def test_derivatives(self, power, rng):
        nlp = flatten(build_power(power, 2))
        for point in interior_points(nlp, rng, 2):
            assert_derivatives(nlp, point, rng.normal(size=nlp.m), rtol=1e-5, atol=1e-5)

    def test_every_row_tag_is_emitted(self, power):
        graph = build_power(power, 3)
        assert {c.name.split("[")[0] for c in graph.constraints} == set(POWER_ROW_TAGS.values())
        assert set(POWER_BOUND_TAGS.values()) <= {v.name.split("[")[0] for v in graph.variables}
