"""Subdomains of the problem graph and their primal-dual index sets.

``partition_graph`` splits the node set into K disjoint parts, ``expand``
grows a part by BFS levels, and ``build_index_maps`` turns node sets into
the index sets used by the Schwarz preconditioner: ``W[k]`` (union of
``U[i]`` over the part) and ``W_omega[k]`` (over the expanded part).
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from graphipm.errors import TooManyParts

logger = logging.getLogger(__name__)

OmegaSpec = int | str | Sequence[int]


def _farthest_point_seeds(graph: nx.Graph, nodes: list[int], count: int) -> list[int]:
    seeds = [min(nodes)]
    dist = dict(nx.single_source_shortest_path_length(graph, seeds[0]))
    while len(seeds) < count:
        best = max(nodes, key=lambda v: (dist[v], -v))
        seeds.append(best)
        for v, d in nx.single_source_shortest_path_length(graph, best).items():
            if d < dist[v]:
                dist[v] = d
    return seeds


def _grow_regions(graph: nx.Graph, nodes: list[int], count: int) -> list[list[int]]:
    """Balanced BFS growth of ``count`` regions over one connected component."""
    seeds = _farthest_point_seeds(graph, nodes, count)
    n = len(nodes)
    targets = [n // count + (1 if k < n % count else 0) for k in range(count)]
    owner: dict[int, int] = {s: k for k, s in enumerate(seeds)}
    regions = [[s] for s in seeds]
    queues = [deque([s]) for s in seeds]

    def next_node(k: int) -> int | None:
        queue = queues[k]
        while queue:
            for nb in sorted(graph.neighbors(queue[0])):
                if nb not in owner:
                    return nb
            queue.popleft()
        return None

    for relaxed in (False, True):
        while len(owner) < n:
            order = sorted(range(count), key=lambda k: (len(regions[k]), seeds[k]))
            grown = False
            for k in order:
                if not relaxed and len(regions[k]) >= targets[k]:
                    continue
                nb = next_node(k)
                if nb is None:
                    continue
                owner[nb] = k
                regions[k].append(nb)
                queues[k].append(nb)
                grown = True
                break
            if not grown:
                break
    return regions


def _split_counts(sizes: list[int], K: int) -> list[int]:
    """Parts per component: at least one each, the rest by largest remainder."""
    total = sum(sizes)
    counts = [1] * len(sizes)
    spare = K - len(sizes)
    if spare <= 0:
        return counts
    shares = [spare * s / total for s in sizes]
    for c in range(len(sizes)):
        counts[c] += min(int(shares[c]), sizes[c] - 1)
    left = K - sum(counts)
    order = sorted(range(len(sizes)), key=lambda c: (-(shares[c] - int(shares[c])), c))
    while left > 0:
        for c in order:
            if left and counts[c] < sizes[c]:
                counts[c] += 1
                left -= 1
    return counts


def partition_graph(graph: nx.Graph, K: int) -> list[list[int]]:
    """Split the nodes of ``graph`` into ``K`` balanced, connected-where-possible parts.

    Seeds are chosen by farthest-point traversal from the smallest node;
    regions then grow one node at a time along their BFS queue, smallest
    region first (ties by seed id). Disconnected components are split
    independently. Parts are returned sorted, ordered by smallest node.
    """
    n = graph.number_of_nodes()
    if K < 1:
        raise ValueError(f"Number of parts must be >= 1, got {K}")
    if K > n:
        raise TooManyParts(f"Cannot split {n} nodes into {K} parts")

    components = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0])
    parts: list[list[int]] = []
    if K < len(components):
        # fewer parts than components: pack whole components, largest first
        bins: list[list[int]] = [[] for _ in range(K)]
        for comp in sorted(components, key=lambda c: (-len(c), c[0])):
            target = min(range(K), key=lambda b: (len(bins[b]), b))
            bins[target].extend(comp)
        parts = [sorted(b) for b in bins]
    else:
        counts = _split_counts([len(c) for c in components], K)
        for comp, count in zip(components, counts):
            sub = graph.subgraph(comp)
            parts.extend(sorted(r) for r in _grow_regions(sub, comp, count))

    parts.sort(key=lambda p: p[0])
    logger.debug("Partitioned %d nodes into sizes %s", n, [len(p) for p in parts])
    return parts


def expand(graph: nx.Graph, part: Iterable[int], omega: int) -> list[int]:
    """BFS closure of ``part`` to depth ``omega``."""
    if omega < 0:
        raise ValueError(f"Expansion level must be >= 0, got {omega}")
    current = set(part)
    frontier = set(current)
    for _ in range(omega):
        nxt = {nb for v in frontier for nb in graph.neighbors(v)} - current
        if not nxt:
            break
        current |= nxt
        frontier = nxt
    return sorted(current)


def diameter(graph: nx.Graph, nodes: Iterable[int] | None = None) -> int:
    """Largest diameter over the components touching ``nodes`` (all components by default)."""
    touched = None if nodes is None else set(nodes)
    result = 0
    for comp in nx.connected_components(graph):
        if touched is not None and not (comp & touched):
            continue
        if len(comp) > 1:
            result = max(result, nx.diameter(graph.subgraph(comp)))
    return result


def auto_omega(graph: nx.Graph, part: Sequence[int], cap: int | None = None) -> int:
    """Smallest omega whose expansion holds at least ceil(1.5 |part|) nodes, capped."""
    cap = diameter(graph, part) if cap is None else cap
    want = math.ceil(1.5 * len(part))
    for omega in range(cap + 1):
        if len(expand(graph, part, omega)) >= want:
            return omega
    return cap


@dataclass
class SubdomainMap:
    """Parts, expanded parts and their primal-dual index sets."""

    graph: nx.Graph
    U: Mapping[int, np.ndarray]
    parts: list[list[int]]
    expanded: list[list[int]]
    omegas: list[int]
    caps: list[int]
    W: list[np.ndarray] = field(default_factory=list)
    W_omega: list[np.ndarray] = field(default_factory=list)
    positions: list[np.ndarray] = field(default_factory=list)
    dimension: int = 0

    def __post_init__(self):
        self.dimension = int(sum(len(u) for u in self.U.values()))
        self.W = [self._indices(p) for p in self.parts]
        self.W_omega = [self._indices(p) for p in self.expanded]
        self.positions = [np.searchsorted(wo, w) for w, wo in zip(self.W, self.W_omega)]

    def _indices(self, nodes: Sequence[int]) -> np.ndarray:
        if not nodes:
            return np.zeros(0, dtype=np.int64)
        return np.sort(np.concatenate([self.U[i] for i in nodes])).astype(np.int64)

    @property
    def K(self) -> int:
        return len(self.parts)

    def at_limit(self) -> bool:
        """No further expansion can change any subdomain."""
        total = self.graph.number_of_nodes()
        return all(o >= c or len(e) == total
                   for o, c, e in zip(self.omegas, self.caps, self.expanded))

    def with_omegas(self, omegas: Sequence[int]) -> "SubdomainMap":
        omegas = [min(int(o), c) for o, c in zip(omegas, self.caps)]
        expanded = [expand(self.graph, p, o) for p, o in zip(self.parts, omegas)]
        return SubdomainMap(self.graph, self.U, self.parts, expanded, omegas, self.caps)

    def restrict(self, k: int, vector: np.ndarray) -> np.ndarray:
        return vector[self.W_omega[k]]

    def prolong(self, k: int, local: np.ndarray, out: np.ndarray) -> None:
        """Write back only the non-overlapping entries of a subdomain solution."""
        out[self.W[k]] = local[self.positions[k]]

    def check_invariants(self) -> list[str]:
        """Violated set relations, empty when the map is consistent."""
        errors = []
        nodes = set(self.graph.nodes)
        seen: set[int] = set()
        for k, part in enumerate(self.parts):
            if seen & set(part):
                errors.append(f"Part {k} overlaps an earlier part")
            seen |= set(part)
            if not set(part) <= set(self.expanded[k]):
                errors.append(f"Part {k} is not contained in its expansion")
        if seen != nodes:
            errors.append("Parts do not cover the node set")
        if set().union(*map(set, self.expanded)) != nodes:
            errors.append("Expanded parts do not cover the node set")
        allw = np.concatenate(self.W) if self.W else np.zeros(0, dtype=np.int64)
        if len(allw) != self.dimension or not np.array_equal(np.sort(allw), np.arange(self.dimension)):
            errors.append("Index sets W do not form a disjoint cover")
        return errors


def resolve_omegas(graph: nx.Graph, parts: list[list[int]], omega: OmegaSpec) -> tuple[list[int], list[int]]:
    caps = [diameter(graph, p) for p in parts]
    if isinstance(omega, str):
        if omega != "auto":
            raise ValueError(f"Invalid overlap: {omega}. Must be an integer or 'auto'")
        omegas = [auto_omega(graph, p, c) for p, c in zip(parts, caps)]
    elif isinstance(omega, (int, np.integer)):
        if omega < 0:
            raise ValueError(f"Overlap must be >= 0, got {omega}")
        omegas = [min(int(omega), c) for c in caps]
    else:
        omegas = [min(int(o), c) for o, c in zip(omega, caps)]
    return omegas, caps


def expansion_level(graph: nx.Graph, part: Iterable[int], expanded: Iterable[int]) -> int:
    """Number of BFS levels separating ``part`` from the farthest node of ``expanded``."""
    expanded = list(expanded)
    dist = nx.multi_source_dijkstra_path_length(graph, set(part))
    missing = [v for v in expanded if v not in dist]
    if missing:
        raise ValueError(f"Expanded nodes {missing} are not reachable from their part")
    return max((dist[v] for v in expanded), default=0)


def build_index_maps(U: Mapping[int, np.ndarray], graph: nx.Graph, parts: list[list[int]],
                     expanded: list[list[int]] | None = None,
                     omega: OmegaSpec = 0) -> SubdomainMap:
    """Index sets for ``parts``.

    Without ``expanded`` each part is grown by the omega levels given; with
    it, the recorded omegas are the levels those expansions actually reach
    and ``omega`` is ignored.
    """
    if expanded is None:
        omegas, caps = resolve_omegas(graph, parts, omega)
        expanded = [expand(graph, p, o) for p, o in zip(parts, omegas)]
    else:
        caps = [diameter(graph, p) for p in parts]
        omegas = [min(expansion_level(graph, p, e), c) for p, e, c in zip(parts, expanded, caps)]
    return SubdomainMap(graph, U, [list(p) for p in parts], [list(e) for e in expanded], omegas, caps)


def make_subdomains(U: Mapping[int, np.ndarray], graph: nx.Graph, K: int,
                    omega: OmegaSpec = "auto") -> SubdomainMap:
    parts = partition_graph(graph, K)
    submap = build_index_maps(U, graph, parts, omega=omega)
    logger.debug("Subdomains K=%d omegas=%s sizes=%s", K, submap.omegas,
                 [len(w) for w in submap.W_omega])
    return submap


def format_partition(submap: SubdomainMap) -> str:
    """Text dump of a subdomain map, one block per subdomain."""
    lines = [f"# subdomains K={submap.K} dimension={submap.dimension}"]
    for k in range(submap.K):
        lines.append(f"subdomain {k + 1} omega={submap.omegas[k]} "
                     f"|W|={len(submap.W[k])} |W_omega|={len(submap.W_omega[k])}")
        lines.append("  nodes: " + " ".join(str(v) for v in submap.parts[k]))
        lines.append("  expanded: " + " ".join(str(v) for v in submap.expanded[k]))
    return "\n".join(lines) + "\n"
