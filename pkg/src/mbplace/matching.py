"""Capacitated bipartite assignment engine.

Maintains a maximum partial assignment of pairs to deployed middleboxes and
grows it incrementally: adding a middlebox only ever applies augmenting
paths that start at the new location, so pairs served earlier stay served
(they may be handed over to another middlebox, never dropped) and the loads
of untouched middleboxes never change.

Augmenting paths are found by breadth-first search; a layered multi-path
variant is available as an optional fast path behind the same interface.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .exceptions import AlreadyActive, InvalidPath
from .instance import FeasibilitySets

UNASSIGNED = None


@dataclass(frozen=True)
class AugmentingPath:
    """Alternating path (m_0, p_0, m_1, p_1, ..., p_k).

    ``middleboxes[i] -- pairs[i]`` are the new assignment edges and
    ``pairs[i] -- middleboxes[i+1]`` the released ones; the final pair is
    free before application.
    """

    middleboxes: tuple[int, ...]
    pairs: tuple[int, ...]

    def __post_init__(self):
        if len(self.middleboxes) != len(self.pairs) or not self.pairs:
            raise InvalidPath("path must alternate middlebox/pair and be nonempty")

    @property
    def num_edges(self) -> int:
        return 2 * len(self.pairs) - 1


class Assignment:
    """Mutable pair -> middlebox assignment with per-middlebox loads."""

    def __init__(self, fs: FeasibilitySets, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.fs = fs
        self.capacity = capacity
        self.mu: list[int | None] = [UNASSIGNED] * fs.num_pairs
        self.load: dict[int, int] = {}
        self.num_assigned = 0

    # -- queries ---------------------------------------------------------

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(sorted(self.load))

    def free_capacity(self, m: int) -> int:
        return self.capacity - self.load[m]

    def assigned_pairs(self) -> frozenset[int]:
        return frozenset(i for i, m in enumerate(self.mu) if m is not UNASSIGNED)

    def free_pairs(self) -> list[int]:
        return [i for i, m in enumerate(self.mu) if m is UNASSIGNED]

    def clone(self) -> "Assignment":
        other = Assignment.__new__(Assignment)
        other.fs = self.fs
        other.capacity = self.capacity
        other.mu = list(self.mu)
        other.load = dict(self.load)
        other.num_assigned = self.num_assigned
        return other

    # -- augmenting-path machinery ----------------------------------------

    def find_augmenting_path(self, start: int) -> AugmentingPath | None:
        """Shortest augmenting path from ``start`` to a free pair, or None.

        BFS layers guarantee shortest; neighbors are explored in ascending
        pair index, which makes the returned path deterministic.
        """
        if start not in self.load:
            raise ValueError(f"start {start} is not an active middlebox")
        if self.load[start] >= self.capacity:
            raise ValueError(f"start {start} has no free capacity")
        parent_of_pair: dict[int, int] = {}
        parent_of_mb: dict[int, int] = {}
        queue = deque([start])
        seen_mb = {start}
        while queue:
            x = queue.popleft()
            for p in self.fs.pairs_of[x]:
                if p in parent_of_pair:
                    continue
                parent_of_pair[p] = x
                owner = self.mu[p]
                if owner is UNASSIGNED:
                    return self._reconstruct(start, p, parent_of_pair, parent_of_mb)
                if owner not in seen_mb:
                    seen_mb.add(owner)
                    parent_of_mb[owner] = p
                    queue.append(owner)
        return None

    @staticmethod
    def _reconstruct(start, free_pair, parent_of_pair, parent_of_mb) -> AugmentingPath:
        mbs: list[int] = []
        prs: list[int] = []
        p = free_pair
        while True:
            x = parent_of_pair[p]
            mbs.append(x)
            prs.append(p)
            if x == start:
                break
            p = parent_of_mb[x]
        mbs.reverse()
        prs.reverse()
        return AugmentingPath(tuple(mbs), tuple(prs))

    def apply_augmenting_path(self, path: AugmentingPath) -> None:
        """Flip the path's edges; grows the assignment by exactly one pair."""
        mbs, prs = path.middleboxes, path.pairs
        k = len(prs)
        if mbs[0] not in self.load or self.load[mbs[0]] >= self.capacity:
            raise InvalidPath("path must start at an active middlebox with free capacity")
        if self.mu[prs[-1]] is not UNASSIGNED:
            raise InvalidPath("path must end at a free pair")
        for i in range(k):
            if mbs[i] not in self.load:
                raise InvalidPath(f"middlebox {mbs[i]} is not active")
            if not self.fs.contains(mbs[i], prs[i]):
                raise InvalidPath(f"pair {prs[i]} is not feasible for middlebox {mbs[i]}")
            if i + 1 < k and self.mu[prs[i]] != mbs[i + 1]:
                raise InvalidPath(
                    f"pair {prs[i]} is not currently assigned to middlebox {mbs[i + 1]}"
                )
        for i in range(k):
            self.mu[prs[i]] = mbs[i]
        self.load[mbs[0]] += 1
        self.num_assigned += 1

    # -- incremental growth -------------------------------------------------

    def add_middlebox(self, m: int, *, phased: bool = False) -> int:
        """Deploy m and re-maximize; returns the gained number of pairs.

        Only paths starting at m are needed: the previous assignment was
        maximum, so after exhausting them the new one is maximum as well.
        """
        if m in self.load:
            raise AlreadyActive(f"middlebox {m} is already deployed")
        if m not in self.fs.pairs_of:
            raise ValueError(f"{m} is not a candidate location")
        self.load[m] = 0
        if phased:
            return self._augment_phased(m)
        gained = 0
        while self.load[m] < self.capacity:
            path = self.find_augmenting_path(m)
            if path is None:
                break
            self.apply_augmenting_path(path)
            gained += 1
        return gained

    # -- layered fast path ---------------------------------------------------

    def _augment_phased(self, m: int) -> int:
        """Hopcroft-Karp-style phases: per phase, BFS layering then a maximal
        set of node-disjoint shortest paths from m (disjoint apart from m)."""
        gained = 0
        while self.load[m] < self.capacity:
            dist_mb, target_layer = self._layer_from(m)
            if target_layer is None:
                break
            blocked_pairs: set[int] = set()
            blocked_mbs: set[int] = set()
            found_any = False
            while self.load[m] < self.capacity:
                path = self._layered_dfs(m, dist_mb, target_layer, blocked_pairs, blocked_mbs)
                if path is None:
                    break
                self.apply_augmenting_path(path)
                gained += 1
                found_any = True
            if not found_any:
                break
        return gained

    def _layer_from(self, start: int):
        """BFS layers over middleboxes; returns (layers, depth of nearest free pair)."""
        dist_mb = {start: 0}
        queue = deque([start])
        target = None
        while queue:
            x = queue.popleft()
            if target is not None and dist_mb[x] >= target:
                continue
            for p in self.fs.pairs_of[x]:
                owner = self.mu[p]
                if owner is UNASSIGNED:
                    if target is None:
                        target = dist_mb[x]
                elif owner not in dist_mb:
                    dist_mb[owner] = dist_mb[x] + 1
                    queue.append(owner)
        return dist_mb, target

    def _layered_dfs(self, start, dist_mb, target_layer, blocked_pairs, blocked_mbs):
        stack_mbs: list[int] = []
        stack_prs: list[int] = []

        def dfs(x: int) -> bool:
            for p in self.fs.pairs_of[x]:
                if p in blocked_pairs:
                    continue
                owner = self.mu[p]
                if owner is UNASSIGNED:
                    if dist_mb[x] == target_layer:
                        blocked_pairs.add(p)
                        stack_mbs.append(x)
                        stack_prs.append(p)
                        return True
                    continue
                if owner in blocked_mbs or dist_mb.get(owner) != dist_mb[x] + 1:
                    continue
                if dist_mb[owner] > target_layer:
                    continue
                blocked_pairs.add(p)
                blocked_mbs.add(owner)
                if dfs(owner):
                    stack_mbs.append(x)
                    stack_prs.append(p)
                    return True
            return False

        if not dfs(start):
            return None
        stack_mbs.reverse()
        stack_prs.reverse()
        return AugmentingPath(tuple(stack_mbs), tuple(stack_prs))


def phi(M, fs: FeasibilitySets, capacity: int) -> int:
    """Maximum number of pairs assignable to middlebox set M (stateless)."""
    state = Assignment(fs, capacity)
    for m in sorted(set(M)):
        state.add_middlebox(m)
    return state.num_assigned
