import math
import random

import pytest
from hypothesis import given, strategies as st

from adept.program_model import parse_source
from adept.scores import FAILED_SCORE
from adept.search_tree import NodeStatus, ProgramNode, SearchTree
from adept.selection import (
    AnnealState,
    boltzmann_supplement,
    sa_accept,
    select_parents,
    update_temperature,
)

from conftest import SIMPLE_SOURCE


def test_sa_accept_improving_child():
    assert sa_accept(5.0, 3.0, 1.0, u=0.999)


def test_sa_accept_metropolis_threshold():
    # exp(-1) = 0.36788 separates these two draws
    assert sa_accept(2.0, 3.0, 1.0, u=0.30)
    assert not sa_accept(2.0, 3.0, 1.0, u=0.50)


def test_sa_accept_failed_child_rejected():
    assert not sa_accept(FAILED_SCORE, 3.0, 1.0, u=0.0)


def test_sa_accept_needs_positive_temperature():
    with pytest.raises(ValueError):
        sa_accept(1.0, 2.0, 0.0, 0.5)


def test_temperature_reanneal_at_stall_threshold():
    state = AnnealState(temperature=1.0, stall_counter=2)
    nxt = update_temperature(state, improved_global_best=False)
    assert nxt.temperature == 1.2
    assert nxt.stall_counter == 0


def test_temperature_decay_on_stall_below_threshold():
    state = AnnealState(temperature=1.0, stall_counter=0)
    nxt = update_temperature(state, improved_global_best=False)
    assert nxt.temperature == 0.95
    assert nxt.stall_counter == 1


def test_temperature_improvement_resets_then_decays():
    state = AnnealState(temperature=0.95, stall_counter=2)
    nxt = update_temperature(state, improved_global_best=True)
    assert nxt.temperature == 0.95 * 0.95
    assert nxt.stall_counter == 0


def test_temperature_stays_positive_any_sequence():
    rng = random.Random(0)
    state = AnnealState()
    for _ in range(500):
        state = update_temperature(state, rng.random() < 0.3)
        assert state.temperature > 0


@given(st.integers(min_value=1, max_value=40))
def test_geometric_decay_exactness(j):
    state = AnnealState(t0=1.0, alpha=0.95, n_stall=j + 1)  # never re-anneals within j steps
    expected = 1.0
    for _ in range(j):
        state = update_temperature(state, improved_global_best=False)
        expected = 0.95 * expected
    assert state.temperature == expected


def test_boltzmann_probability_example():
    # pool {n1: 1.0, n2: 0.0}, T=1: P(n1) = 1/(1+e^-1)
    pool = [(1, 1.0), (2, 0.0)]
    hits = 0
    trials = 20000
    rng = random.Random(42)
    for _ in range(trials):
        if boltzmann_supplement(pool, 1, 1.0, rng) == [1]:
            hits += 1
    assert abs(hits / trials - 1 / (1 + math.exp(-1))) < 0.01


def test_boltzmann_equal_scores_uniform():
    pool = [(i, 2.5) for i in range(4)]
    counts = {i: 0 for i in range(4)}
    rng = random.Random(7)
    for _ in range(20000):
        counts[boltzmann_supplement(pool, 1, 1.0, rng)[0]] += 1
    for i in range(4):
        assert abs(counts[i] / 20000 - 0.25) < 0.02


def test_boltzmann_count_covers_pool():
    pool = [(1, 0.5), (2, 1.5), (3, -1.0)]
    picked = boltzmann_supplement(pool, 10, 1.0, random.Random(0))
    assert sorted(picked) == [1, 2, 3]


def test_boltzmann_empty_pool_returns_fewer():
    assert boltzmann_supplement([], 3, 1.0, random.Random(0)) == []


def test_boltzmann_draws_distinct():
    pool = [(i, float(i)) for i in range(6)]
    picked = boltzmann_supplement(pool, 4, 0.5, random.Random(3))
    assert len(picked) == len(set(picked)) == 4


# --- select_parents over a real tree ----------------------------------------


def _tree_with_scores(profile, root_scores, child_scores=None):
    program = parse_source(SIMPLE_SOURCE, profile, entry_hint="solve")
    tree = SearchTree()
    roots = []
    for s in root_scores:
        failed = s is None
        roots.append(tree.insert(ProgramNode(
            program=program,
            score=FAILED_SCORE if failed else s,
            status=NodeStatus.FAILED if failed else NodeStatus.EVALUATED,
        )))
    tree.commit_batch()
    if child_scores is not None:
        for parent, s in zip(roots, child_scores):
            failed = s is None
            tree.insert(ProgramNode(
                program=program,
                score=FAILED_SCORE if failed else s,
                status=NodeStatus.FAILED if failed else NodeStatus.EVALUATED,
                parent_id=parent,
            ))
        tree.commit_batch()
    return tree, roots


def test_select_all_improving_children(profile):
    tree, roots = _tree_with_scores(profile, [1.0] * 5, [2.0] * 5)
    picked = select_parents(tree, AnnealState(), 5, random.Random(0))
    assert sorted(picked) == [5, 6, 7, 8, 9]


def test_select_full_boltzmann_fallback(profile):
    # children so much worse that every Metropolis draw rejects
    tree, roots = _tree_with_scores(profile, [100.0] * 5, [0.0] * 5)
    state = AnnealState(temperature=1e-6)
    picked = select_parents(tree, state, 5, random.Random(1))
    assert sorted(picked) == roots


def test_select_pool_exhaustion_returns_fewer(profile):
    tree, roots = _tree_with_scores(profile, [1.0], [0.0])
    state = AnnealState(temperature=1e-6)
    picked = select_parents(tree, state, 5, random.Random(2))
    assert picked == roots  # 0 accepted + only one history node


def test_select_roots_auto_accepted(profile):
    tree, roots = _tree_with_scores(profile, [1.0, 2.0, 3.0])
    picked = select_parents(tree, AnnealState(), 3, random.Random(3))
    assert sorted(picked) == roots


def test_select_never_returns_failed(profile):
    tree, roots = _tree_with_scores(profile, [1.0, None, 2.0], [None, None, 5.0])
    rng = random.Random(4)
    for _ in range(50):
        picked = select_parents(tree, AnnealState(), 3, rng)
        assert picked
        for node_id in picked:
            assert tree.node(node_id).evaluated


def test_select_caps_at_k(profile):
    tree, _ = _tree_with_scores(profile, [1.0] * 5, [2.0] * 5)
    assert len(select_parents(tree, AnnealState(), 3, random.Random(5))) == 3
