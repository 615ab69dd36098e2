"""Gas network and multi-period power flow instance generators."""

from graphipm.instances.fixtures import bundled_fixture, load_fixture, write_fixture
from graphipm.instances.gas import GasInstance, build_gas
from graphipm.instances.power import PowerInstance, build_power

__all__ = [
    "GasInstance",
    "PowerInstance",
    "build_gas",
    "build_power",
    "bundled_fixture",
    "load_fixture",
    "write_fixture",
]
