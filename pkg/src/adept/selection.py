"""Hybrid parent selection: Metropolis acceptance over the frontier, dynamic
re-annealing, and Boltzmann supplementation from history."""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, replace

from .scores import is_failed
from .search_tree import SearchTree

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnnealState:
    temperature: float = 1.0
    stall_counter: int = 0
    t0: float = 1.0
    alpha: float = 0.95
    delta_t: float = 0.2
    n_stall: int = 3

    def __post_init__(self):
        if self.temperature <= 0 or self.t0 <= 0:
            raise ValueError("temperature must stay positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.delta_t <= 0 or self.n_stall < 1:
            raise ValueError("delta_t must be > 0 and n_stall >= 1")


def sa_accept(s_child: float, s_parent: float, temperature: float, u: float) -> bool:
    """Metropolis criterion on the child/parent score gap; failed children
    are never accepted."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if is_failed(s_child):
        return False
    if s_child >= s_parent:
        return True
    return u < math.exp((s_child - s_parent) / temperature)


def update_temperature(state: AnnealState, improved_global_best: bool) -> AnnealState:
    """One bookkeeping step: decay on progress, re-anneal after n_stall
    consecutive non-improving steps."""
    if improved_global_best:
        return replace(state, temperature=state.alpha * state.temperature, stall_counter=0)
    stall = state.stall_counter + 1
    if stall >= state.n_stall:
        return replace(state, temperature=state.temperature + state.delta_t, stall_counter=0)
    return replace(state, temperature=state.alpha * state.temperature, stall_counter=stall)


def boltzmann_weights(scores: list[float], temperature: float) -> list[float]:
    """exp((s - s_max)/T) per candidate; max-shifted for overflow safety."""
    s_max = max(scores)
    return [math.exp((s - s_max) / temperature) for s in scores]


def boltzmann_supplement(
    pool: list[tuple[int, float]],
    count: int,
    temperature: float,
    rng: random.Random,
) -> list[int]:
    """Sample up to ``count`` distinct ids without replacement, each draw
    proportional to exp((S - S_max)/T) renormalized over what remains.
    Never raises on an empty pool; returns fewer ids with a warning."""
    if count < 0:
        raise ValueError("count must be >= 0")
    if count > 0 and not pool:
        log.warning("boltzmann supplementation requested from an empty pool")
        return []
    remaining = list(pool)
    chosen: list[int] = []
    while remaining and len(chosen) < count:
        weights = boltzmann_weights([s for _, s in remaining], temperature)
        total = sum(weights)
        draw = rng.random() * total
        acc = 0.0
        picked = len(remaining) - 1
        for i, w in enumerate(weights):
            acc += w
            if draw < acc:
                picked = i
                break
        chosen.append(remaining.pop(picked)[0])
    if len(chosen) < count:
        log.warning("boltzmann pool exhausted: returning %d of %d", len(chosen), count)
    return chosen


def select_parents(
    tree: SearchTree, state: AnnealState, k: int, rng: random.Random
) -> list[int]:
    """SA-filter the frontier against each node's parent (roots auto-accept),
    then top up to ``k`` from history via Boltzmann sampling.  Output only
    ever contains evaluated nodes."""
    frontier = tree.frontier()
    accepted: list[int] = []
    for node in frontier:
        if not node.evaluated:
            continue
        if node.parent_id is None:
            accepted.append(node.id)
            continue
        parent = tree.node(node.parent_id)
        if sa_accept(node.score, parent.score, state.temperature, rng.random()):
            accepted.append(node.id)
    accepted = accepted[:k]
    if len(accepted) < k:
        frontier_ids = {n.id for n in frontier}
        history = [
            (n.id, n.score)
            for n in tree.evaluated_nodes()
            if n.id not in frontier_ids
        ]
        accepted.extend(
            boltzmann_supplement(history, k - len(accepted), state.temperature, rng)
        )
    return accepted
