"""Exact brute-force baselines at desk scale.

These replace integer programs for acceptance testing and ratio metrics:
subset enumeration ordered by cardinality (so the first full cover is the
minimum), with cheap capacity bounds pruning hopeless branches. No external
ILP solver is involved anywhere.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

from .exceptions import Infeasible, TooLarge
from .instance import FeasibilitySets, PlacementInstance
from .matching import Assignment

DEFAULT_LIMIT = 16


@dataclass(frozen=True)
class ExactResult:
    value: int
    witness_set: tuple[int, ...]
    witness_assignment: dict[int, int] | None
    explored: int
    elapsed: float


def _extract_assignment(state: Assignment) -> dict[int, int]:
    return {i: m for i, m in enumerate(state.mu) if m is not None}


def exact_min_middleboxes(inst: PlacementInstance, fs: FeasibilitySets,
                          limit: int = DEFAULT_LIMIT) -> ExactResult:
    """Smallest middlebox set serving every pair, by exhaustive search.

    Subsets are enumerated in cardinality-then-lexicographic order; the
    first witness found is returned. Raises TooLarge beyond ``limit``
    candidates and Infeasible when even the full candidate set falls short.
    """
    t0 = time.perf_counter()
    universe = list(fs.candidates)
    if len(universe) > limit:
        raise TooLarge(f"{len(universe)} candidates exceed enumeration limit {limit}")
    target = inst.num_pairs
    explored = 0
    if target == 0:
        return ExactResult(0, (), {}, 0, time.perf_counter() - t0)

    full = Assignment(fs, inst.capacity)
    for u in universe:
        full.add_middlebox(u)
    explored += 1
    if full.num_assigned < target:
        raise Infeasible(
            f"only {full.num_assigned} of {target} pairs coverable with all candidates"
        )

    def search(state: Assignment, start: int, slots: int):
        nonlocal explored
        for idx in range(start, len(universe)):
            if len(universe) - idx < slots:
                return None
            trial = state.clone()
            trial.add_middlebox(universe[idx])
            explored += 1
            if slots == 1:
                if trial.num_assigned == target:
                    return trial
            else:
                # Remaining slots can add at most capacity pairs each.
                if trial.num_assigned + (slots - 1) * inst.capacity < target:
                    continue
                hit = search(trial, idx + 1, slots - 1)
                if hit is not None:
                    return hit
        return None

    for k in range(1, len(universe) + 1):
        if k * inst.capacity < target:
            continue
        hit = search(Assignment(fs, inst.capacity), 0, k)
        if hit is not None:
            return ExactResult(k, hit.active, _extract_assignment(hit), explored,
                               time.perf_counter() - t0)
    raise Infeasible("unreachable: full candidate set was verified feasible")


def max_assignment_for_n(inst: PlacementInstance, fs: FeasibilitySets, n: int,
                         limit: int = DEFAULT_LIMIT) -> ExactResult:
    """Maximum number of served pairs over all middlebox sets of size n."""
    t0 = time.perf_counter()
    universe = list(fs.candidates)
    if len(universe) > limit:
        raise TooLarge(f"{len(universe)} candidates exceed enumeration limit {limit}")
    if n < 0:
        raise ValueError("n must be >= 0")
    n = min(n, len(universe))
    explored = 0
    cap = min(inst.num_pairs, n * inst.capacity)
    best_value = 0
    best_state: Assignment | None = Assignment(fs, inst.capacity)

    def search(state: Assignment, start: int, slots: int):
        nonlocal explored, best_value, best_state
        if slots == 0:
            if state.num_assigned > best_value:
                best_value = state.num_assigned
                best_state = state
            return
        for idx in range(start, len(universe)):
            if len(universe) - idx < slots or best_value >= cap:
                return
            if state.num_assigned + slots * inst.capacity <= best_value:
                return
            trial = state.clone()
            trial.add_middlebox(universe[idx])
            explored += 1
            search(trial, idx + 1, slots - 1)

    if n > 0:
        search(Assignment(fs, inst.capacity), 0, n)
    witness = best_state
    return ExactResult(best_value, witness.active, _extract_assignment(witness),
                       explored, time.perf_counter() - t0)


def _weighted_cover_exists(members, demands, candidates_of, kappa: Fraction) -> dict | None:
    """Exhaustive assignment search with residual-capacity branch and bound.

    ``members`` are request indices sorted by descending demand so the
    hardest requests branch first.
    """
    residual = {m: kappa for m in {u for j in members for u in candidates_of[j]}}
    order = sorted(members, key=lambda j: (-demands[j], j))
    chosen: dict[int, int] = {}

    def place(k: int) -> bool:
        if k == len(order):
            return True
        remaining = sum(demands[j] for j in order[k:])
        if sum(residual.values()) < remaining:
            return False
        j = order[k]
        for u in candidates_of[j]:
            if u in residual and residual[u] >= demands[j]:
                residual[u] -= demands[j]
                chosen[j] = u
                if place(k + 1):
                    return True
                residual[u] += demands[j]
                del chosen[j]
        return False

    return dict(chosen) if place(0) else None


def exact_weighted_min_middleboxes(requests, rfs, kappa, limit: int = 12,
                                   request_limit: int = 14) -> ExactResult:
    """Minimum middlebox count for an integral assignment at true capacity.

    Unlike the rounded approximation there is no augmentation here: every
    request must fit within ``kappa`` on its middlebox.
    """
    from itertools import combinations

    t0 = time.perf_counter()
    universe = sorted({u for cands in rfs.candidates_of for u in cands})
    if len(universe) > limit:
        raise TooLarge(f"{len(universe)} candidates exceed enumeration limit {limit}")
    if len(rfs.candidates_of) > request_limit:
        raise TooLarge(f"{len(rfs.candidates_of)} requests exceed limit {request_limit}")
    kappa = Fraction(kappa)
    demands = [Fraction(r.demand) for r in requests]
    members = list(range(len(requests)))
    if not members:
        return ExactResult(0, (), {}, 0, time.perf_counter() - t0)
    for j in members:
        if demands[j] > kappa or not rfs.candidates_of[j]:
            raise Infeasible(f"request {j} cannot be served by any middlebox")
    explored = 0
    for k in range(1, len(universe) + 1):
        for subset in combinations(universe, k):
            explored += 1
            allowed = [tuple(u for u in rfs.candidates_of[j] if u in subset)
                       for j in members]
            if any(not a for a in allowed):
                continue
            if sum(demands) > kappa * k:
                continue
            witness = _weighted_cover_exists(members, demands, allowed, kappa)
            if witness is not None:
                return ExactResult(k, subset, witness, explored,
                                   time.perf_counter() - t0)
    raise Infeasible("no candidate subset admits a feasible integral assignment")
