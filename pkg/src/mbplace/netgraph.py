"""Network graph representation and all-pairs shortest-path metrics.

Nodes are dense integers ``0..n-1``. Graphs are undirected with nonnegative
edge weights; parallel edges collapse to the minimum weight and self-loops
are dropped. Distances are computed by one Dijkstra run per source (the
graphs of interest are sparse ISP topologies) and mirrored so the resulting
matrix is exactly symmetric.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, GeoUnavailable

EARTH_RADIUS_KM = 6371.0

METRICS = ("weight", "hops", "geo")


@dataclass(frozen=True)
class Node:
    id: int
    label: str | None = None
    lat: float | None = None
    lon: float | None = None

    @property
    def has_coords(self) -> bool:
        return self.lat is not None and self.lon is not None


class Network:
    """Undirected weighted graph over nodes ``0..n-1``."""

    def __init__(self, nodes: list[Node], edges):
        self.nodes: list[Node] = list(nodes)
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise ValueError(f"node ids must be dense 0..n-1, got {node.id} at {i}")
        n = len(self.nodes)
        canonical: dict[tuple[int, int], float] = {}
        for u, v, w in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) references unknown node")
            if u == v:
                continue
            if w < 0:
                raise ValueError(f"negative edge weight {w} on ({u},{v})")
            key = (u, v) if u < v else (v, u)
            w = float(w)
            if key not in canonical or w < canonical[key]:
                canonical[key] = w
        self.edges: list[tuple[int, int, float]] = [
            (u, v, canonical[(u, v)]) for (u, v) in sorted(canonical)
        ]

    @classmethod
    def from_edges(cls, num_nodes: int, edges) -> "Network":
        return cls([Node(i) for i in range(num_nodes)], edges)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def adjacency(self, weights: dict[tuple[int, int], float] | None = None):
        """Adjacency lists as ``[(neighbor, weight), ...]`` per node."""
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.num_nodes)]
        for u, v, w in self.edges:
            if weights is not None:
                w = weights[(u, v)]
            adj[u].append((v, w))
            adj[v].append((u, w))
        return adj

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges


class DistanceMatrix:
    """Immutable n x n matrix of shortest-path distances.

    Disconnected pairs hold ``inf``; consumers decide how to surface them.
    """

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        values.setflags(write=False)
        self.values = values
        self.n = values.shape[0]

    def d(self, u: int, v: int) -> float:
        return float(self.values[u, v])

    def reachable(self, u: int, v: int) -> bool:
        return math.isfinite(self.values[u, v])


def geo_distance(p1: tuple[float, float], p2: tuple[float, float]) -> float:
    """Great-circle (haversine) distance in kilometers between (lat, lon) points."""
    for lat, lon in (p1, p2):
        if not (-90.0 <= lat <= 90.0):
            raise DomainError(f"latitude {lat} outside [-90, 90]")
        if not (-180.0 <= lon <= 180.0):
            raise DomainError(f"longitude {lon} outside [-180, 180]")
    lat1, lon1 = map(math.radians, p1)
    lat2, lon2 = map(math.radians, p2)
    sin_dlat = math.sin((lat2 - lat1) / 2.0)
    sin_dlon = math.sin((lon2 - lon1) / 2.0)
    h = sin_dlat * sin_dlat + math.cos(lat1) * math.cos(lat2) * sin_dlon * sin_dlon
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def _dijkstra(adj, source: int, n: int) -> np.ndarray:
    dist = np.full(n, np.inf)
    dist[source] = 0.0
    heap = [(0.0, source)]
    done = [False] * n
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w in adj[u]:
            nd = du + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def compute_apsp(net: Network, metric: str = "weight") -> DistanceMatrix:
    """All-pairs shortest paths under the chosen metric.

    ``weight`` uses the stored edge weights, ``hops`` counts edges, and
    ``geo`` replaces every edge weight with the great-circle distance of its
    endpoints before the shortest-path pass (raises GeoUnavailable when a
    node lacks coordinates).
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}, expected one of {METRICS}")
    n = net.num_nodes
    if n == 0:
        raise ValueError("network is empty")
    weights = None
    if metric == "hops":
        weights = {(u, v): 1.0 for u, v, _ in net.edges}
    elif metric == "geo":
        for node in net.nodes:
            if not node.has_coords:
                raise GeoUnavailable(f"node {node.id} ({node.label!r}) has no coordinates")
        weights = {
            (u, v): geo_distance(
                (net.nodes[u].lat, net.nodes[u].lon),
                (net.nodes[v].lat, net.nodes[v].lon),
            )
            for u, v, _ in net.edges
        }
    adj = net.adjacency(weights)
    mat = np.empty((n, n))
    for s in range(n):
        mat[s] = _dijkstra(adj, s, n)
    # Mirror the upper triangle so d(u,v) == d(v,u) holds bit-exactly.
    iu = np.triu_indices(n, k=1)
    mat[(iu[1], iu[0])] = mat[iu]
    np.fill_diagonal(mat, 0.0)
    return DistanceMatrix(mat)
