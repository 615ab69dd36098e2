"""Instance fixture files.

A fixture is a JSON object with ``"kind": "gas" | "power"`` and
``"version": 1``; see ``schemas/gas_instance.schema.json`` and
``schemas/power_instance.schema.json``. Loading checks every field and
then the instance's own consistency rules; the first problem is raised as
:class:`ParseError` naming the field path.
"""

from __future__ import annotations

import dataclasses
from importlib import resources
from pathlib import Path
from typing import Any, Callable

from graphipm.errors import ParseError
from graphipm.instances.gas import Compressor, Demand, GasInstance, Junction, Pipe, Receipt
from graphipm.instances.power import Branch, Bus, Generator, PowerInstance, Storage
from graphipm.io import atomic_write_json, load_json

FIXTURE_VERSION = 1

BUNDLED = {
    "gas": "gas_network.json",
    "power": "ieee14_storage.json",
}

Instance = GasInstance | PowerInstance


def bundled_fixture(kind: str) -> Path:
    """Path of a fixture shipped with the package."""
    if kind not in BUNDLED:
        raise ValueError(f"Unknown bundled fixture: {kind}. Must be one of {sorted(BUNDLED)}")
    return Path(str(resources.files("graphipm.instances") / "data" / BUNDLED[kind]))


class _Fields:
    """Typed access to one JSON object, reporting the field path on errors."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ParseError(f"Expected an object, got {type(data).__name__}", field=path or "<root>")
        self.data = data
        self.path = path

    def _name(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def get(self, key: str, kind: str, default: Any = dataclasses.MISSING) -> Any:
        if key not in self.data or (self.data[key] is None and default is not dataclasses.MISSING):
            if default is dataclasses.MISSING:
                raise ParseError("Missing required field", field=self._name(key))
            return default
        value = self.data[key]
        ok = {
            "str": lambda v: isinstance(v, str),
            "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
            "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
            "list": lambda v: isinstance(v, list),
        }[kind](value)
        if not ok:
            raise ParseError(f"Expected {kind}, got {value!r}", field=self._name(key))
        return float(value) if kind == "number" else value

    def numbers(self, key: str, default: Any = dataclasses.MISSING) -> list[float]:
        values = self.get(key, "list", default)
        for k, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ParseError(f"Expected number, got {v!r}", field=f"{self._name(key)}[{k}]")
        return [float(v) for v in values]

    def items(self, key: str, parse: Callable[["_Fields"], Any], required: bool = True) -> list[Any]:
        values = self.get(key, "list") if required else self.get(key, "list", [])
        return [parse(_Fields(v, f"{self._name(key)}[{k}]")) for k, v in enumerate(values)]


def _gas_from_dict(f: _Fields) -> GasInstance:
    return GasInstance(
        name=f.get("name", "str", "gas"),
        junctions=f.items("junctions", lambda j: Junction(
            id=j.get("id", "str"),
            rho_min=j.get("rho_min", "number"),
            rho_max=j.get("rho_max", "number"),
            fixed_density=j.get("fixed_density", "number", None),
        )),
        pipes=f.items("pipes", lambda p: Pipe(
            id=p.get("id", "str"),
            from_junction=p.get("from", "str"),
            to_junction=p.get("to", "str"),
            length=p.get("length", "number"),
            diameter=p.get("diameter", "number"),
            friction=p.get("friction", "number"),
            effective_length=p.get("effective_length", "number", None),
        )),
        compressors=f.items("compressors", lambda c: Compressor(
            id=c.get("id", "str"),
            from_junction=c.get("from", "str"),
            to_junction=c.get("to", "str"),
            power_max=c.get("power_max", "number"),
            flow_max=c.get("flow_max", "number"),
            ratio_min=c.get("ratio_min", "number", 1.0),
            ratio_max=c.get("ratio_max", "number", 2.0),
        ), required=False),
        receipts=f.items("receipts", lambda r: Receipt(
            id=r.get("id", "str"),
            junction=r.get("junction", "str"),
            supply_max=r.get("supply_max", "number"),
            price=r.numbers("price"),
        ), required=False),
        demands=f.items("demands", lambda d: Demand(
            id=d.get("id", "str"),
            junction=d.get("junction", "str"),
            demand_max=d.get("demand_max", "number"),
            price=d.numbers("price"),
        ), required=False),
        economic_factor=f.get("economic_factor", "number", 1.0),
        wave_speed=f.get("wave_speed", "number", 1.0),
        dt=f.get("dt", "number", 1.0),
        kappa=f.get("kappa", "number", 0.2857),
        source=f.get("source", "str", ""),
    )


def _power_from_dict(f: _Fields) -> PowerInstance:
    return PowerInstance(
        name=f.get("name", "str", "power"),
        buses=f.items("buses", lambda b: Bus(
            id=b.get("id", "int"),
            kind=b.get("kind", "str"),
            vmin=b.get("vmin", "number"),
            vmax=b.get("vmax", "number"),
            pd=b.get("pd", "number", 0.0),
            qd=b.get("qd", "number", 0.0),
        )),
        generators=f.items("generators", lambda g: Generator(
            id=g.get("id", "str"),
            bus=g.get("bus", "int"),
            pmin=g.get("pmin", "number"),
            pmax=g.get("pmax", "number"),
            qmin=g.get("qmin", "number"),
            qmax=g.get("qmax", "number"),
            c2=g.get("c2", "number", 0.0),
            c1=g.get("c1", "number", 0.0),
            c0=g.get("c0", "number", 0.0),
        )),
        branches=f.items("branches", lambda br: Branch(
            id=br.get("id", "str"),
            from_bus=br.get("from", "int"),
            to_bus=br.get("to", "int"),
            r=br.get("r", "number"),
            x=br.get("x", "number"),
            b=br.get("b", "number", 0.0),
            tap=br.get("tap", "number", 1.0),
            shift=br.get("shift", "number", 0.0),
            rate=br.get("rate", "number", 9.9),
            angmin=br.get("angmin", "number", Branch.angmin),
            angmax=br.get("angmax", "number", Branch.angmax),
        )),
        storages=f.items("storages", lambda s: Storage(
            id=s.get("id", "str"),
            bus=s.get("bus", "int"),
            energy_max=s.get("energy_max", "number"),
            charge_max=s.get("charge_max", "number"),
            discharge_max=s.get("discharge_max", "number"),
            apparent_max=s.get("apparent_max", "number"),
            charge_eff=s.get("charge_eff", "number", 0.95),
            discharge_eff=s.get("discharge_eff", "number", 0.95),
            loss=s.get("loss", "number", 0.0),
            initial_energy=s.get("initial_energy", "number", 0.0),
            q_min=s.get("q_min", "number", -0.1),
            q_max=s.get("q_max", "number", 0.1),
            cycle_cost=s.get("cycle_cost", "number", 0.0),
        ), required=False),
        load_profile=f.numbers("load_profile", [1.0]),
        dt=f.get("dt", "number", 1.0),
        source=f.get("source", "str", ""),
    )


_PARSERS = {"gas": _gas_from_dict, "power": _power_from_dict}


def parse_instance(data: Any) -> Instance:
    """Field-level parse without the consistency rules of ``validate()``."""
    f = _Fields(data, "")
    kind = f.get("kind", "str")
    if kind not in _PARSERS:
        raise ParseError(f"Unknown fixture kind: {kind}. Must be one of {sorted(_PARSERS)}", field="kind")
    version = f.get("version", "int")
    if version != FIXTURE_VERSION:
        raise ParseError(f"Unsupported fixture version {version}; expected {FIXTURE_VERSION}", field="version")
    return _PARSERS[kind](f)


def instance_from_dict(data: Any) -> Instance:
    inst = parse_instance(data)
    errors = inst.validate()
    if errors:
        location, _, message = errors[0].partition(": ")
        raise ParseError(message or errors[0], field=location)
    return inst


def _rename(data: dict[str, Any], renames: dict[str, str]) -> dict[str, Any]:
    return {renames.get(k, k): v for k, v in data.items()}


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    """Fixture document for ``inst``; the inverse of :func:`instance_from_dict`."""
    data = dataclasses.asdict(inst)
    if isinstance(inst, GasInstance):
        edge_names = {"from_junction": "from", "to_junction": "to"}
        data["pipes"] = [_rename(p, edge_names) for p in data["pipes"]]
        data["compressors"] = [_rename(c, edge_names) for c in data["compressors"]]
        return {"kind": "gas", "version": FIXTURE_VERSION, **data}
    edge_names = {"from_bus": "from", "to_bus": "to"}
    data["branches"] = [_rename(b, edge_names) for b in data["branches"]]
    return {"kind": "power", "version": FIXTURE_VERSION, **data}


def load_fixture(path: Path) -> Instance:
    """Load and validate a gas or power fixture."""
    return instance_from_dict(load_json(path))


def write_fixture(inst: Instance, path: Path) -> Path:
    return atomic_write_json(path, instance_to_dict(inst))
