"""Transient gas network over a periodic time horizon.

Each pipe is split into equal segments with interior junctions. Every
period ``t`` becomes one graph node holding densities, average and
negative mass fluxes, compressor flow/boost/power and receipts/deliveries,
together with the period's mass balance, momentum and compressor rows.
Linepack rows couple consecutive periods; the row at ``t = 1`` refers to
period ``T`` (``rho_0 = rho_T``), so the problem graph is a cycle.

Mass enters a segment at ``A (phi_avg - phi_neg)`` and leaves it at
``A (phi_avg + phi_neg)``. Compressor power is
``P = W_a f (alpha**kappa - 1)`` with ``kappa = 0.2857`` by default.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import networkx as nx

from graphipm.errors import InvalidHorizon
from graphipm.expr import Expr, exp, log, quicksum, signed_square, square
from graphipm.model import OptiGraph

logger = logging.getLogger(__name__)

DEFAULT_KAPPA = 0.2857

# constraint name prefix for every equation of the model; bounds are on variables
GAS_ROW_TAGS = {
    "mass_balance": "balance",
    "momentum": "momentum",
    "linepack": "linepack",
    "flow_direction": "direction",
    "boost": "boost",
    "compressor_power": "compressor_power",
    "source_density": "source_density",
}
GAS_BOUND_TAGS = {
    "density_bounds": "rho",
    "power_cap": "power",
    "flow_cap": "flow",
}


@dataclass
class Junction:
    id: str
    rho_min: float
    rho_max: float
    fixed_density: float | None = None


@dataclass
class Pipe:
    id: str
    from_junction: str
    to_junction: str
    length: float
    diameter: float
    friction: float
    effective_length: float | None = None

    @property
    def area(self) -> float:
        return math.pi * self.diameter ** 2 / 4.0

    @property
    def lhat(self) -> float:
        return self.length if self.effective_length is None else self.effective_length


@dataclass
class Compressor:
    id: str
    from_junction: str
    to_junction: str
    power_max: float
    flow_max: float
    ratio_min: float = 1.0
    ratio_max: float = 2.0


@dataclass
class Receipt:
    id: str
    junction: str
    supply_max: float
    price: list[float]


@dataclass
class Demand:
    id: str
    junction: str
    demand_max: float
    price: list[float]


@dataclass
class GasInstance:
    name: str
    junctions: list[Junction]
    pipes: list[Pipe]
    compressors: list[Compressor] = field(default_factory=list)
    receipts: list[Receipt] = field(default_factory=list)
    demands: list[Demand] = field(default_factory=list)
    economic_factor: float = 1.0
    wave_speed: float = 1.0
    dt: float = 1.0
    kappa: float = DEFAULT_KAPPA
    source: str = ""

    def network(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(j.id for j in self.junctions)
        for edge in [*self.pipes, *self.compressors]:
            graph.add_edge(edge.from_junction, edge.to_junction)
        return graph

    def counts(self) -> dict[str, int]:
        return {
            "junctions": len(self.junctions),
            "pipes": len(self.pipes),
            "compressors": len(self.compressors),
            "receipts": len(self.receipts),
            "demands": len(self.demands),
        }

    def validate(self) -> list[str]:
        """Check references, positivity and connectivity; returns error messages."""
        errors: list[str] = []
        ids = [j.id for j in self.junctions]
        known = set(ids)
        if not self.junctions:
            errors.append("junctions: at least one junction is required")
        if len(known) != len(ids):
            errors.append("junctions: duplicate junction ids")
        for k, j in enumerate(self.junctions):
            if not 0 < j.rho_min <= j.rho_max:
                errors.append(f"junctions[{k}].rho_min: need 0 < rho_min <= rho_max")
            if j.fixed_density is not None and not j.rho_min < j.fixed_density < j.rho_max:
                errors.append(f"junctions[{k}].fixed_density: must lie strictly inside the density bounds")
        for k, p in enumerate(self.pipes):
            for attr in ("length", "diameter", "friction"):
                if not getattr(p, attr) > 0:
                    errors.append(f"pipes[{k}].{attr}: must be positive")
            if p.effective_length is not None and not p.effective_length > 0:
                errors.append(f"pipes[{k}].effective_length: must be positive")
        for k, c in enumerate(self.compressors):
            for attr in ("power_max", "flow_max"):
                if not getattr(c, attr) > 0:
                    errors.append(f"compressors[{k}].{attr}: must be positive")
            if not 0 < c.ratio_min < c.ratio_max:
                errors.append(f"compressors[{k}].ratio_min: need 0 < ratio_min < ratio_max")
        for group, edges in (("pipes", self.pipes), ("compressors", self.compressors)):
            for k, e in enumerate(edges):
                for attr in ("from_junction", "to_junction"):
                    if getattr(e, attr) not in known:
                        errors.append(f"{group}[{k}].{attr}: unknown junction '{getattr(e, attr)}'")
                if e.from_junction == e.to_junction:
                    errors.append(f"{group}[{k}]: endpoints must differ")
        for group, items, cap in (("receipts", self.receipts, "supply_max"),
                                  ("demands", self.demands, "demand_max")):
            for k, item in enumerate(items):
                if item.junction not in known:
                    errors.append(f"{group}[{k}].junction: unknown junction '{item.junction}'")
                if not getattr(item, cap) > 0:
                    errors.append(f"{group}[{k}].{cap}: must be positive")
                if not item.price:
                    errors.append(f"{group}[{k}].price: price series is empty")
        for attr in ("economic_factor", "wave_speed", "dt", "kappa"):
            if not getattr(self, attr) > 0:
                errors.append(f"{attr}: must be positive")
        if not errors and self.junctions and not nx.is_connected(self.network()):
            errors.append("network: junctions, pipes and compressors must form a connected network")
        return errors


@dataclass(frozen=True)
class Segment:
    id: str
    pipe: str
    start: str
    end: str
    length: float
    lhat: float
    diameter: float
    friction: float
    area: float


def discretize(inst: GasInstance, segments_per_pipe: int) -> tuple[list[Junction], list[Segment]]:
    """Split every pipe into ``segments_per_pipe`` equal segments.

    Interior junctions take the envelope of their pipe's endpoint density
    bounds. Segment ids are ``<pipe>.<k>``.
    """
    if segments_per_pipe < 1:
        raise ValueError(f"segments_per_pipe must be >= 1, got {segments_per_pipe}")
    by_id = {j.id: j for j in inst.junctions}
    junctions = list(inst.junctions)
    segments: list[Segment] = []
    for pipe in inst.pipes:
        a, b = by_id[pipe.from_junction], by_id[pipe.to_junction]
        chain = [a.id]
        for k in range(1, segments_per_pipe):
            inner = Junction(f"{pipe.id}.j{k}", min(a.rho_min, b.rho_min), max(a.rho_max, b.rho_max))
            junctions.append(inner)
            chain.append(inner.id)
        chain.append(b.id)
        for k in range(segments_per_pipe):
            segments.append(Segment(
                id=f"{pipe.id}.{k + 1}",
                pipe=pipe.id,
                start=chain[k],
                end=chain[k + 1],
                length=pipe.length / segments_per_pipe,
                lhat=pipe.lhat / segments_per_pipe,
                diameter=pipe.diameter,
                friction=pipe.friction,
                area=pipe.area,
            ))
    return junctions, segments


@dataclass
class _Period:
    rho: dict[str, Expr]
    phi_avg: dict[str, Expr]
    phi_neg: dict[str, Expr]


def _price(series: list[float], t: int) -> float:
    return series[(t - 1) % len(series)]


def build_gas(inst: GasInstance, T: int, segments_per_pipe: int = 1) -> OptiGraph:
    """Build the ``T``-period gas model; one graph node per period.

    Args:
        inst: Validated gas network.
        T: Number of periods, at least 2.
        segments_per_pipe: Discretization of every pipe.

    Returns:
        OptiGraph whose problem graph is the cycle 1-2-...-T-1.
    """
    if T < 2:
        raise InvalidHorizon(f"Gas horizon needs T >= 2, got {T}")
    junctions, segments = discretize(inst, segments_per_pipe)

    graph = OptiGraph(name=f"gas-{inst.name}-T{T}")
    for t in range(1, T + 1):
        graph.add_node(f"t{t}")
    for t in range(2, T + 1):
        graph.add_edge(t - 1, t)
    if T > 2:
        graph.add_edge(T, 1)

    periods = {t: _add_period(graph, inst, junctions, segments, t) for t in range(1, T + 1)}

    # linepack: Lhat (drho_end + drho_start)/dt = -4 phi_neg, with rho_0 = rho_T;
    # each row goes to the lower endpoint of its edge, so {T, 1} stays on node 1
    for t in range(1, T + 1):
        p = T if t == 1 else t - 1
        now, prev = periods[t], periods[p]
        for seg in segments:
            change = (now.rho[seg.end] - prev.rho[seg.end]) + (now.rho[seg.start] - prev.rho[seg.start])
            graph.add_edge_link(
                p, t, seg.lhat * change / inst.dt + 4.0 * now.phi_neg[seg.id], 0.0,
                name=f"linepack[{seg.id},{t}]",
            )

    logger.debug("Built gas model %s: %s", graph.name, graph.summary())
    return graph


def _add_period(graph: OptiGraph, inst: GasInstance, junctions: list[Junction],
                segments: list[Segment], t: int) -> _Period:
    rho = {
        j.id: graph.add_variable(t, j.rho_min, j.rho_max, name=f"rho[{j.id},{t}]")
        for j in junctions
    }
    phi_avg = {s.id: graph.add_variable(t, start=0.0, name=f"phi_avg[{s.id},{t}]") for s in segments}
    phi_neg = {s.id: graph.add_variable(t, start=0.0, name=f"phi_neg[{s.id},{t}]") for s in segments}
    flow, ratio, power = {}, {}, {}
    for c in inst.compressors:
        flow[c.id] = graph.add_variable(t, -c.flow_max, c.flow_max, name=f"flow[{c.id},{t}]")
        ratio[c.id] = graph.add_variable(t, c.ratio_min, c.ratio_max, name=f"ratio[{c.id},{t}]")
        power[c.id] = graph.add_variable(t, 0.0, c.power_max, name=f"power[{c.id},{t}]")
    supply = {r.id: graph.add_variable(t, 0.0, r.supply_max, name=f"supply[{r.id},{t}]") for r in inst.receipts}
    demand = {d.id: graph.add_variable(t, 0.0, d.demand_max, name=f"demand[{d.id},{t}]") for d in inst.demands}

    # outflow minus inflow at each junction equals supply minus demand
    net: dict[str, list[Expr]] = {j.id: [] for j in junctions}
    for s in segments:
        net[s.start].append(s.area * (phi_avg[s.id] - phi_neg[s.id]))
        net[s.end].append(-s.area * (phi_avg[s.id] + phi_neg[s.id]))
    for c in inst.compressors:
        net[c.from_junction].append(flow[c.id])
        net[c.to_junction].append(-flow[c.id])
    for r in inst.receipts:
        net[r.junction].append(-supply[r.id])
    for d in inst.demands:
        net[d.junction].append(demand[d.id])
    for j in junctions:
        graph.add_constraint(t, quicksum(net[j.id]), "==", 0.0, name=f"balance[{j.id},{t}]")
        if j.fixed_density is not None:
            graph.add_constraint(t, rho[j.id], "==", j.fixed_density, name=f"source_density[{j.id},{t}]")

    for s in segments:
        resistance = s.friction * s.length / s.diameter
        body = square(rho[s.start]) - square(rho[s.end]) + resistance * signed_square(phi_avg[s.id])
        graph.add_constraint(t, body, "==", 0.0, name=f"momentum[{s.id},{t}]")

    for c in inst.compressors:
        i, j = c.from_junction, c.to_junction
        graph.add_constraint(t, flow[c.id] * (rho[i] - rho[j]), "<=", 0.0, name=f"direction[{c.id},{t}]")
        graph.add_constraint(t, rho[j] - ratio[c.id] * rho[i], "==", 0.0, name=f"boost[{c.id},{t}]")
        work = inst.wave_speed * flow[c.id] * (exp(inst.kappa * log(ratio[c.id])) - 1.0)
        graph.add_constraint(t, power[c.id] - work, "==", 0.0, name=f"compressor_power[{c.id},{t}]")

    cost = [inst.economic_factor * power[c.id] for c in inst.compressors]
    cost += [_price(r.price, t) * supply[r.id] for r in inst.receipts]
    cost += [-_price(d.price, t) * demand[d.id] for d in inst.demands]
    if cost:
        graph.add_objective_term(t, quicksum(cost))
    return _Period(rho, phi_avg, phi_neg)
