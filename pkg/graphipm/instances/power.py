"""Multi-period AC optimal power flow with storage, polar form.

Per period: bus voltage magnitudes and angles, generator outputs, branch
flows at both ends, storage injections, charge/discharge rates and state
of charge. Branch flows follow the standard pi model with tap and phase
shift. Complex equations are split into real and reactive rows.

Storage injection convention: ``ps + sc - sd = -loss`` and ``qs = sqc``.
``ps`` enters the bus balance with the same sign as a generator, so it is
positive when discharging and ``ps = sd - sc - loss``: the loss always
reduces what reaches the bus. The state of charge at ``t = 1`` is tied to
``initial_energy``; later periods are linked to the previous one through a
row owned by the earlier period, so the problem graph is a path.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import networkx as nx

from graphipm.errors import InvalidHorizon
from graphipm.expr import Expr, cos, quicksum, sin, square
from graphipm.model import OptiGraph

logger = logging.getLogger(__name__)

BUS_KINDS = ("ref", "pv", "pq")

POWER_ROW_TAGS = {
    "reference_angle": "ref_angle",
    "active_balance": "balance_p",
    "reactive_balance": "balance_q",
    "ohm_from_active": "ohm_p_fr",
    "ohm_from_reactive": "ohm_q_fr",
    "ohm_to_active": "ohm_p_to",
    "ohm_to_reactive": "ohm_q_to",
    "thermal_from": "thermal_fr",
    "thermal_to": "thermal_to",
    "angle_difference_min": "angle_min",
    "angle_difference_max": "angle_max",
    "storage_dynamics": "storage_energy",
    "storage_active": "storage_p",
    "storage_reactive": "storage_q",
    "storage_apparent": "storage_thermal",
}
POWER_BOUND_TAGS = {
    "voltage_magnitude": "vm",
    "generator_active": "pg",
    "generator_reactive": "qg",
    "state_of_charge": "energy",
    "charge_rate": "charge",
    "discharge_rate": "discharge",
}


@dataclass
class Bus:
    id: int
    kind: str
    vmin: float
    vmax: float
    pd: float = 0.0
    qd: float = 0.0


@dataclass
class Generator:
    id: str
    bus: int
    pmin: float
    pmax: float
    qmin: float
    qmax: float
    c2: float = 0.0
    c1: float = 0.0
    c0: float = 0.0


@dataclass
class Branch:
    id: str
    from_bus: int
    to_bus: int
    r: float
    x: float
    b: float = 0.0
    tap: float = 1.0
    shift: float = 0.0
    rate: float = 9.9
    angmin: float = -math.pi / 3
    angmax: float = math.pi / 3

    def admittance(self) -> tuple[float, float]:
        """Series admittance ``g + j b`` of ``1 / (r + j x)``."""
        z2 = self.r ** 2 + self.x ** 2
        return self.r / z2, -self.x / z2


@dataclass
class Storage:
    id: str
    bus: int
    energy_max: float
    charge_max: float
    discharge_max: float
    apparent_max: float
    charge_eff: float = 0.95
    discharge_eff: float = 0.95
    loss: float = 0.0
    initial_energy: float = 0.0
    q_min: float = -0.1
    q_max: float = 0.1
    cycle_cost: float = 0.0


@dataclass
class PowerInstance:
    name: str
    buses: list[Bus]
    generators: list[Generator]
    branches: list[Branch]
    storages: list[Storage] = field(default_factory=list)
    load_profile: list[float] = field(default_factory=lambda: [1.0])
    dt: float = 1.0
    source: str = ""

    def network(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(b.id for b in self.buses)
        graph.add_edges_from((br.from_bus, br.to_bus) for br in self.branches)
        return graph

    def counts(self) -> dict[str, int]:
        return {
            "buses": len(self.buses),
            "generators": len(self.generators),
            "branches": len(self.branches),
            "storages": len(self.storages),
        }

    def validate(self) -> list[str]:
        """Check references, bounds and connectivity; returns error messages."""
        errors: list[str] = []
        ids = [b.id for b in self.buses]
        known = set(ids)
        if len(known) != len(ids):
            errors.append("buses: duplicate bus ids")
        refs = [b for b in self.buses if b.kind == "ref"]
        if len(refs) != 1:
            errors.append(f"buses: exactly one reference bus is required, found {len(refs)}")
        for k, b in enumerate(self.buses):
            if b.kind not in BUS_KINDS:
                errors.append(f"buses[{k}].kind: must be one of {list(BUS_KINDS)}")
            if not 0 < b.vmin < b.vmax:
                errors.append(f"buses[{k}].vmin: need 0 < vmin < vmax")
        for k, g in enumerate(self.generators):
            if g.bus not in known:
                errors.append(f"generators[{k}].bus: unknown bus {g.bus}")
            if not g.pmin < g.pmax:
                errors.append(f"generators[{k}].pmin: need pmin < pmax")
            if not g.qmin < g.qmax:
                errors.append(f"generators[{k}].qmin: need qmin < qmax")
        for k, br in enumerate(self.branches):
            for attr in ("from_bus", "to_bus"):
                if getattr(br, attr) not in known:
                    errors.append(f"branches[{k}].{attr}: unknown bus {getattr(br, attr)}")
            if br.from_bus == br.to_bus:
                errors.append(f"branches[{k}]: endpoints must differ")
            if br.r < 0 or br.r ** 2 + br.x ** 2 == 0:
                errors.append(f"branches[{k}].x: impedance must be nonzero with r >= 0")
            if not br.tap > 0:
                errors.append(f"branches[{k}].tap: must be positive")
            if not br.rate > 0:
                errors.append(f"branches[{k}].rate: must be positive")
            if not br.angmin < br.angmax:
                errors.append(f"branches[{k}].angmin: need angmin < angmax")
        for k, s in enumerate(self.storages):
            if s.bus not in known:
                errors.append(f"storages[{k}].bus: unknown bus {s.bus}")
            for attr in ("energy_max", "charge_max", "discharge_max", "apparent_max"):
                if not getattr(s, attr) > 0:
                    errors.append(f"storages[{k}].{attr}: must be positive")
            for attr in ("charge_eff", "discharge_eff"):
                if not 0 < getattr(s, attr) <= 1:
                    errors.append(f"storages[{k}].{attr}: must be in (0, 1]")
            if not 0 < s.initial_energy < s.energy_max:
                errors.append(f"storages[{k}].initial_energy: must lie strictly inside (0, energy_max)")
            if not s.q_min < s.q_max:
                errors.append(f"storages[{k}].q_min: need q_min < q_max")
            if s.loss < 0 or s.cycle_cost < 0:
                errors.append(f"storages[{k}]: loss and cycle_cost must be nonnegative")
        if not self.load_profile or any(v < 0 for v in self.load_profile):
            errors.append("load_profile: needs at least one nonnegative multiplier")
        if not self.dt > 0:
            errors.append("dt: must be positive")
        if not errors and not nx.is_connected(self.network()):
            errors.append("network: buses and branches must form a connected network")
        return errors


@dataclass
class _Period:
    energy: dict[str, Expr]
    charge: dict[str, Expr]
    discharge: dict[str, Expr]


def build_power(inst: PowerInstance, T: int) -> OptiGraph:
    """Build the ``T``-period AC OPF; one graph node per period.

    Args:
        inst: Validated power network.
        T: Number of periods, at least 2.

    Returns:
        OptiGraph whose problem graph is the path 1-2-...-T.

    Raises:
        InvalidHorizon: ``T < 2``.
    """
    if T < 2:
        raise InvalidHorizon(f"Power horizon needs T >= 2, got {T}")
    graph = OptiGraph(name=f"power-{inst.name}-T{T}")
    for t in range(1, T + 1):
        graph.add_node(f"t{t}")
    for t in range(2, T + 1):
        graph.add_edge(t - 1, t)

    periods = {t: _add_period(graph, inst, t) for t in range(1, T + 1)}

    for s in inst.storages:
        for t in range(1, T + 1):
            now = periods[t]
            stored = (s.charge_eff * now.charge[s.id] - now.discharge[s.id] / s.discharge_eff) * inst.dt
            name = f"storage_energy[{s.id},{t}]"
            if t == 1:
                graph.add_constraint(t, now.energy[s.id] - stored, "==", s.initial_energy, name=name)
            else:
                prev = periods[t - 1]
                graph.add_edge_link(t - 1, t, now.energy[s.id] - prev.energy[s.id] - stored, 0.0, name=name)

    logger.debug("Built power model %s: %s", graph.name, graph.summary())
    return graph


def _add_period(graph: OptiGraph, inst: PowerInstance, t: int) -> _Period:
    load = inst.load_profile[(t - 1) % len(inst.load_profile)]
    vm = {b.id: graph.add_variable(t, b.vmin, b.vmax, start=1.0, name=f"vm[{b.id},{t}]") for b in inst.buses}
    va = {b.id: graph.add_variable(t, start=0.0, name=f"va[{b.id},{t}]") for b in inst.buses}
    pg = {g.id: graph.add_variable(t, g.pmin, g.pmax, name=f"pg[{g.id},{t}]") for g in inst.generators}
    qg = {g.id: graph.add_variable(t, g.qmin, g.qmax, name=f"qg[{g.id},{t}]") for g in inst.generators}

    injections_p: dict[int, list[Expr]] = {b.id: [] for b in inst.buses}
    injections_q: dict[int, list[Expr]] = {b.id: [] for b in inst.buses}

    for br in inst.branches:
        i, j = br.from_bus, br.to_bus
        p_fr = graph.add_variable(t, -br.rate, br.rate, start=0.0, name=f"p_fr[{br.id},{t}]")
        q_fr = graph.add_variable(t, -br.rate, br.rate, start=0.0, name=f"q_fr[{br.id},{t}]")
        p_to = graph.add_variable(t, -br.rate, br.rate, start=0.0, name=f"p_to[{br.id},{t}]")
        q_to = graph.add_variable(t, -br.rate, br.rate, start=0.0, name=f"q_to[{br.id},{t}]")
        g, b = br.admittance()
        b_sh = br.b / 2.0
        tr, ti = br.tap * math.cos(br.shift), br.tap * math.sin(br.shift)
        tm = br.tap ** 2
        vv = vm[i] * vm[j]
        cos_ij, sin_ij = cos(va[i] - va[j]), sin(va[i] - va[j])
        cos_ji, sin_ji = cos(va[j] - va[i]), sin(va[j] - va[i])

        graph.add_constraint(t, p_fr - (g / tm * square(vm[i]) + (-g * tr + b * ti) / tm * (vv * cos_ij)
                                        + (-b * tr - g * ti) / tm * (vv * sin_ij)),
                             "==", 0.0, name=f"ohm_p_fr[{br.id},{t}]")
        graph.add_constraint(t, q_fr - (-(b + b_sh) / tm * square(vm[i]) - (-b * tr - g * ti) / tm * (vv * cos_ij)
                                        + (-g * tr + b * ti) / tm * (vv * sin_ij)),
                             "==", 0.0, name=f"ohm_q_fr[{br.id},{t}]")
        graph.add_constraint(t, p_to - (g * square(vm[j]) + (-g * tr - b * ti) / tm * (vv * cos_ji)
                                        + (-b * tr + g * ti) / tm * (vv * sin_ji)),
                             "==", 0.0, name=f"ohm_p_to[{br.id},{t}]")
        graph.add_constraint(t, q_to - (-(b + b_sh) * square(vm[j]) - (-b * tr + g * ti) / tm * (vv * cos_ji)
                                        + (-g * tr - b * ti) / tm * (vv * sin_ji)),
                             "==", 0.0, name=f"ohm_q_to[{br.id},{t}]")
        limit = br.rate ** 2
        graph.add_constraint(t, square(p_fr) + square(q_fr), "<=", limit, name=f"thermal_fr[{br.id},{t}]")
        graph.add_constraint(t, square(p_to) + square(q_to), "<=", limit, name=f"thermal_to[{br.id},{t}]")
        graph.add_constraint(t, va[i] - va[j], "<=", br.angmax, name=f"angle_max[{br.id},{t}]")
        graph.add_constraint(t, va[i] - va[j], ">=", br.angmin, name=f"angle_min[{br.id},{t}]")

        injections_p[i].append(p_fr)
        injections_q[i].append(q_fr)
        injections_p[j].append(p_to)
        injections_q[j].append(q_to)

    for gen in inst.generators:
        injections_p[gen.bus].append(-pg[gen.id])
        injections_q[gen.bus].append(-qg[gen.id])

    energy, charge, discharge = {}, {}, {}
    for s in inst.storages:
        ps = graph.add_variable(t, -s.apparent_max, s.apparent_max, start=0.0, name=f"ps[{s.id},{t}]")
        qs = graph.add_variable(t, -s.apparent_max, s.apparent_max, start=0.0, name=f"qs[{s.id},{t}]")
        qc = graph.add_variable(t, s.q_min, s.q_max, name=f"sqc[{s.id},{t}]")
        charge[s.id] = graph.add_variable(t, 0.0, s.charge_max, name=f"charge[{s.id},{t}]")
        discharge[s.id] = graph.add_variable(t, 0.0, s.discharge_max, name=f"discharge[{s.id},{t}]")
        energy[s.id] = graph.add_variable(t, 0.0, s.energy_max, start=s.initial_energy,
                                          name=f"energy[{s.id},{t}]")
        graph.add_constraint(t, ps + charge[s.id] - discharge[s.id], "==", -s.loss, name=f"storage_p[{s.id},{t}]")
        graph.add_constraint(t, qs - qc, "==", 0.0, name=f"storage_q[{s.id},{t}]")
        graph.add_constraint(t, square(ps) + square(qs), "<=", s.apparent_max ** 2,
                             name=f"storage_thermal[{s.id},{t}]")
        injections_p[s.bus].append(-ps)
        injections_q[s.bus].append(-qs)

    for bus in inst.buses:
        if bus.kind == "ref":
            graph.add_constraint(t, va[bus.id], "==", 0.0, name=f"ref_angle[{bus.id},{t}]")
        graph.add_constraint(t, quicksum(injections_p[bus.id]), "==", -load * bus.pd,
                             name=f"balance_p[{bus.id},{t}]")
        graph.add_constraint(t, quicksum(injections_q[bus.id]), "==", -load * bus.qd,
                             name=f"balance_q[{bus.id},{t}]")

    cost = [g.c2 * square(pg[g.id]) + g.c1 * pg[g.id] + g.c0 for g in inst.generators]
    cost += [s.cycle_cost * (charge[s.id] + discharge[s.id]) for s in inst.storages if s.cycle_cost > 0]
    if cost:
        graph.add_objective_term(t, quicksum(cost))
    return _Period(energy, charge, discharge)
