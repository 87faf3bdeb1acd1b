"""Greedy incremental deployment: always add the location with the largest
marginal gain in served pairs.

Submodularity of the assignment function makes the greedy count at most
``(1 + ln(min(capacity, |P|))) * OPT``. Gains are evaluated on cloned
snapshots of the live assignment, optionally in parallel across candidates;
the commit is sequential, so deployed locations are never revisited and
served pairs never drop out.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .exceptions import Stalled
from .instance import FeasibilitySets, PlacementInstance
from .matching import Assignment


@dataclass(frozen=True)
class GreedyStep:
    iteration: int
    chosen: int
    gain: int
    phi_after: int


@dataclass
class GreedyTrace:
    """Per-iteration record plus the live assignment reached so far."""

    steps: list[GreedyStep]
    engine: Assignment
    total_pairs: int

    @property
    def middleboxes(self) -> list[int]:
        return [s.chosen for s in self.steps]

    @property
    def complete(self) -> bool:
        return self.engine.num_assigned == self.total_pairs


def _candidate_order(fs: FeasibilitySets, active) -> list[int]:
    return [u for u in fs.candidates if u not in active]


def _evaluate_chunk(engine: Assignment, candidates, num_free, capacity):
    """Best (gain, candidate, state) within one ascending-id chunk.

    A candidate's gain equals its final load, so it is bounded by
    min(capacity, |S_m|, free pairs); note it is NOT bounded by the free
    pairs within S_m alone, since handover paths may end at a free pair of
    another middlebox. Candidates whose bound cannot beat the chunk's
    running best are skipped; ties already lost to a smaller id are skipped
    too, so the reduction over chunks is exactly the sequential argmax.
    """
    best_gain, best_m, best_state = 0, None, None
    for m in candidates:
        bound = min(capacity, len(engine.fs.pairs_of[m]), num_free)
        if bound <= best_gain:
            continue
        trial = engine.clone()
        gained = trial.add_middlebox(m)
        if gained > best_gain:
            best_gain, best_m, best_state = gained, m, trial
    return best_gain, best_m, best_state


def greedy_step(engine: Assignment, *, threads: int = 1):
    """One greedy iteration: returns (chosen, gain) and mutates the engine.

    Raises Stalled when no candidate improves the assignment although free
    pairs remain (e.g. |P| > capacity * |U|).
    """
    candidates = _candidate_order(engine.fs, engine.load)
    num_free = engine.fs.num_pairs - engine.num_assigned
    if num_free == 0:
        raise ValueError("all pairs are already assigned")
    if threads > 1 and len(candidates) > 1:
        chunks = [candidates[i::threads] for i in range(threads)]
        chunks = [c for c in chunks if c]
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(
                lambda c: _evaluate_chunk(engine, c, num_free, engine.capacity), chunks
            ))
    else:
        results = [_evaluate_chunk(engine, candidates, num_free, engine.capacity)]
    best_gain, best_m, best_state = 0, None, None
    for gain, m, state in results:
        if m is None:
            continue
        if gain > best_gain or (gain == best_gain and best_m is not None and m < best_m):
            best_gain, best_m, best_state = gain, m, state
    if best_m is None:
        raise Stalled(
            f"no candidate can serve any of the {num_free} remaining pairs"
        )
    # Adopt the winning snapshot; identical to replaying its augmentations.
    engine.mu = best_state.mu
    engine.load = best_state.load
    engine.num_assigned = best_state.num_assigned
    return best_m, best_gain


def _run(engine: Assignment, total_pairs: int, steps: list[GreedyStep],
         budget: int | None, threads: int) -> None:
    done = 0
    while engine.num_assigned < total_pairs:
        if budget is not None and done >= budget:
            break
        chosen, gain = greedy_step(engine, threads=threads)
        steps.append(GreedyStep(len(steps), chosen, gain, engine.num_assigned))
        done += 1


def greedy_place(inst: PlacementInstance, fs: FeasibilitySets, *,
                 threads: int = 1) -> GreedyTrace:
    """Deploy middleboxes greedily until every pair is served."""
    engine = Assignment(fs, inst.capacity)
    steps: list[GreedyStep] = []
    _run(engine, inst.num_pairs, steps, None, threads)
    return GreedyTrace(steps, engine, inst.num_pairs)


def incremental_extend(trace: GreedyTrace, budget: int, *,
                       threads: int = 1) -> GreedyTrace:
    """Continue a trace by up to ``budget`` further steps.

    The input trace is left untouched (its engine is cloned), so earlier
    prefixes stay valid; greedy is history-deterministic, hence extending a
    prefix reproduces the corresponding slice of the full run.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    engine = trace.engine.clone()
    steps = list(trace.steps)
    _run(engine, trace.total_pairs, steps, budget, threads)
    return GreedyTrace(steps, engine, trace.total_pairs)


def greedy_prefix(inst: PlacementInstance, fs: FeasibilitySets) -> GreedyTrace:
    """Empty trace to be grown step by step via incremental_extend."""
    return GreedyTrace([], Assignment(fs, inst.capacity), inst.num_pairs)


def greedy_approximation_bound(capacity: int, num_pairs: int) -> float:
    """Guarantee factor ``1 + ln(min(capacity, |P|))`` on the greedy count."""
    top = min(capacity, num_pairs)
    if top < 1:
        return 1.0
    return 1.0 + math.log(top)
