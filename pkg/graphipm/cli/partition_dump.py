"""The ``partition`` command: show the subdomains a ras run would use."""

from __future__ import annotations

from pathlib import Path

from graphipm.cli.config import RunConfig, build_model
from graphipm.io import atomic_write_text
from graphipm.nlp import flatten
from graphipm.partition import SubdomainMap, format_partition, make_subdomains


def partition_config(config: RunConfig) -> SubdomainMap:
    """Partition the problem graph of ``config`` into ``config.K`` subdomains."""
    nlp = flatten(build_model(config), threads=config.threads)
    return make_subdomains(nlp.U, nlp.graph, config.K, config.omega)


def write_partition(config: RunConfig) -> tuple[SubdomainMap, Path]:
    submap = partition_config(config)
    return submap, atomic_write_text(Path(config.out) / "partition.txt", format_partition(submap))
