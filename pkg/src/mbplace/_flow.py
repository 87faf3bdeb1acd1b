"""Successive-shortest-path min-cost flow over exact rational arithmetic.

Capacities and costs are Fractions, so flow values and objectives are exact;
the weighted module's stopping guard compares them without tolerances.
Shortest paths use Dijkstra with Johnson node potentials; the initial
potentials come from one Bellman-Ford pass (the construction has negative
arc costs out of the source but no negative cycles).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction

ZERO = Fraction(0)


@dataclass
class _Arc:
    to: int
    cap: Fraction
    cost: Fraction
    flow: Fraction = ZERO

    @property
    def residual(self) -> Fraction:
        return self.cap - self.flow


@dataclass
class FlowNetwork:
    num_nodes: int
    arcs: list[_Arc] = field(default_factory=list)
    out: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        self.out = [[] for _ in range(self.num_nodes)]

    def add_arc(self, u: int, v: int, cap, cost=ZERO) -> int:
        """Adds u->v (capacity cap, unit cost) plus its residual twin; returns
        the forward arc index (twin is index+1)."""
        idx = len(self.arcs)
        self.arcs.append(_Arc(v, Fraction(cap), Fraction(cost)))
        self.arcs.append(_Arc(u, ZERO, -Fraction(cost)))
        self.out[u].append(idx)
        self.out[v].append(idx + 1)
        return idx

    def _bellman_ford(self, source: int) -> list[Fraction | None]:
        dist: list[Fraction | None] = [None] * self.num_nodes
        dist[source] = ZERO
        for _ in range(self.num_nodes - 1):
            changed = False
            for u in range(self.num_nodes):
                if dist[u] is None:
                    continue
                for ai in self.out[u]:
                    arc = self.arcs[ai]
                    if arc.residual > 0:
                        nd = dist[u] + arc.cost
                        if dist[arc.to] is None or nd < dist[arc.to]:
                            dist[arc.to] = nd
                            changed = True
            if not changed:
                break
        return dist

    def _dijkstra(self, source: int, potential):
        dist: list[Fraction | None] = [None] * self.num_nodes
        prev_arc: list[int | None] = [None] * self.num_nodes
        dist[source] = ZERO
        heap: list[tuple[Fraction, int]] = [(ZERO, source)]
        done = [False] * self.num_nodes
        while heap:
            du, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for ai in self.out[u]:
                arc = self.arcs[ai]
                v = arc.to
                if done[v] or arc.residual <= 0 or potential[v] is None:
                    continue
                nd = du + arc.cost + potential[u] - potential[v]
                if dist[v] is None or nd < dist[v]:
                    dist[v] = nd
                    prev_arc[v] = ai
                    heapq.heappush(heap, (nd, v))
        return dist, prev_arc

    def min_cost_max_flow(self, source: int, sink: int) -> tuple[Fraction, Fraction]:
        """Push flow until no residual path remains, always along the current
        cheapest path; returns (total flow, total cost)."""
        potential = self._bellman_ford(source)
        total_flow = ZERO
        total_cost = ZERO
        while True:
            if potential[sink] is None:
                # Sink unreachable even in the initial residual network.
                break
            dist, prev_arc = self._dijkstra(source, potential)
            if dist[sink] is None:
                break
            for v in range(self.num_nodes):
                if dist[v] is not None:
                    potential[v] += dist[v]
            bottleneck = None
            v = sink
            while v != source:
                arc = self.arcs[prev_arc[v]]
                bottleneck = arc.residual if bottleneck is None else min(bottleneck, arc.residual)
                v = self.arcs[prev_arc[v] ^ 1].to
            v = sink
            while v != source:
                ai = prev_arc[v]
                self.arcs[ai].flow += bottleneck
                self.arcs[ai ^ 1].flow -= bottleneck
                total_cost += bottleneck * self.arcs[ai].cost
                v = self.arcs[ai ^ 1].to
            total_flow += bottleneck
        return total_flow, total_cost
