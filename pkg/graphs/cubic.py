"""
Cubic (3-regular) graph catalogue and sampling.
"""
import logging
from collections import defaultdict
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np

from core.exceptions import CapabilityError
from core.utils.seeding import stream_rng

from .models import WeightedGraph

logger = logging.getLogger(__name__)

CUBIC_MIN_ORDER = 4
CUBIC_MAX_ORDER = 10
DEGREE = 3


def _check_order(n: int, max_order: Optional[int]) -> None:
    if n % 2:
        raise CapabilityError(f"cubic graphs need an even vertex count, got {n}")
    if n < CUBIC_MIN_ORDER:
        raise CapabilityError(f"cubic graphs need at least {CUBIC_MIN_ORDER} vertices, got {n}")
    if max_order is not None and n > max_order:
        raise CapabilityError(f"cubic enumeration is capped at {max_order} vertices, got {n}")


def canonical_form(g: WeightedGraph) -> str:
    """
    Minimum adjacency bit string over all vertex orderings.

    Bits are the upper triangle read column by column, so placing a vertex at position k
    fixes column k. Only vertices attaining the smallest column are branched on, and a
    branch is cut as soon as its prefix exceeds the best complete string.
    """
    n = g.n
    adjacency = np.zeros((n, n), dtype=np.uint8)
    for u, v, _ in g.edges:
        adjacency[u, v] = adjacency[v, u] = 1

    best: List[Optional[str]] = [None]

    def extend(order: List[int], prefix: str, remaining: List[int]) -> None:
        if best[0] is not None and prefix > best[0][: len(prefix)]:
            return
        if not remaining:
            if best[0] is None or prefix < best[0]:
                best[0] = prefix
            return
        columns = {v: "".join("1" if adjacency[u, v] else "0" for u in order) for v in remaining}
        smallest = min(columns.values())
        for v in remaining:
            if columns[v] == smallest:
                extend(order + [v], prefix + smallest, [u for u in remaining if u != v])

    extend([], "", list(range(n)))
    return best[0] or ""


def _invariant(graph: nx.Graph) -> Tuple:
    """Isomorphism-invariant bucket key: per-vertex triangle counts and distance profiles."""
    triangles = nx.triangles(graph)
    profiles = []
    for v, lengths in nx.all_pairs_shortest_path_length(graph):
        counts = defaultdict(int)
        for distance in lengths.values():
            counts[distance] += 1
        profiles.append((triangles[v], tuple(sorted(counts.items()))))
    return tuple(sorted(profiles))


def _labelled_cubic(n: int):
    """
    Yield connected labelled cubic graphs as edge lists.

    The smallest vertex with spare degree is always completed first, choosing partners in
    increasing order among already reached vertices or the next unreached one. Every
    isomorphism class is produced at least once; duplicates are removed by the caller.
    """
    degree = [0] * n
    adjacency = [set() for _ in range(n)]
    edges: List[Tuple[int, int]] = []

    def grow(reached: int):
        active = next((v for v in range(reached) if degree[v] < DEGREE), None)
        if active is None:
            if reached == n:
                yield list(edges)
            return

        floor = max((u for u in adjacency[active] if u > active), default=active)
        candidates = [u for u in range(floor + 1, reached) if degree[u] < DEGREE and u not in adjacency[active]]
        if reached < n:
            candidates.append(reached)

        for u in candidates:
            degree[active] += 1
            degree[u] += 1
            adjacency[active].add(u)
            adjacency[u].add(active)
            edges.append((active, u))

            yield from grow(max(reached, u + 1))

            edges.pop()
            adjacency[u].discard(active)
            adjacency[active].discard(u)
            degree[u] -= 1
            degree[active] -= 1

    yield from grow(1)


def enumerate_cubic_graphs(n: int, max_order: Optional[int] = CUBIC_MAX_ORDER) -> List[WeightedGraph]:
    """All non-isomorphic connected cubic graphs on n vertices, ordered by canonical form."""
    _check_order(n, max_order)

    buckets: Dict[Tuple, List[nx.Graph]] = defaultdict(list)
    generated = 0
    for edge_list in _labelled_cubic(n):
        generated += 1
        graph = nx.Graph(edge_list)
        if not nx.is_connected(graph):
            continue
        bucket = buckets[_invariant(graph)]
        if any(nx.is_isomorphic(graph, other) for other in bucket):
            continue
        bucket.append(graph)

    representatives = []
    for bucket in buckets.values():
        for graph in bucket:
            candidate = WeightedGraph.from_networkx(graph)
            representatives.append((canonical_form(candidate), candidate))
    representatives.sort(key=lambda item: item[0])

    logger.info("enumerated %d cubic graphs on %d vertices from %d labellings", len(representatives), n, generated)
    return [
        WeightedGraph(n=graph.n, edges=graph.edges, name=f"cubic{n}_{index}")
        for index, (_, graph) in enumerate(representatives)
    ]


def random_cubic_graph(n: int, seed: int) -> WeightedGraph:
    """
    Uniform simple connected cubic graph via the pairing model.

    Pairings with loops, multi-edges or more than one component are rejected and redrawn
    from the same seeded stream, so (n, seed) always gives the same graph.
    """
    _check_order(n, None)
    rng = stream_rng(seed, n)
    points = np.repeat(np.arange(n), DEGREE)

    attempts = 0
    while True:
        attempts += 1
        pairs = rng.permutation(points).reshape(-1, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        keys = {(int(min(a, b)), int(max(a, b))) for a, b in pairs}
        if len(keys) != len(pairs):
            continue
        graph = nx.Graph()
        graph.add_nodes_from(range(n))
        graph.add_edges_from(keys)
        if not nx.is_connected(graph):
            continue
        logger.debug("sampled cubic graph on %d vertices after %d attempts", n, attempts)
        return WeightedGraph.from_networkx(graph, name=f"random_cubic{n}_{seed}")
