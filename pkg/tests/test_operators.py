import math
import random

import pytest
from hypothesis import given, strategies as st

from adept.callgraph import RepairStatus, build_call_graph
from adept.errors import NoPartner
from adept.operators import (
    CROSSOVER,
    MACRO_MUTATE,
    MICRO_TUNE,
    OperatorServices,
    SchedulerConfig,
    apply_operator,
    crossover_partner_weights,
    sample_crossover_partner,
    schedule_operator,
    schedule_probabilities,
    update_weights,
)
from adept.program_model import Role, parse_source
from adept.scores import FAILED_SCORE
from adept.search_tree import NodeStatus, OperatorWeights, ProgramNode, SearchTree

from conftest import SIMPLE_SOURCE, scripted_gateway


def test_softmax_symmetry():
    assert schedule_probabilities(OperatorWeights(0.0, 0.0), 1.0) == (0.5, 0.5)


def test_softmax_direct_formula():
    p_micro, p_macro = schedule_probabilities(OperatorWeights(1.0, 0.0), 1.0)
    direct = math.exp(1.0) / (math.exp(1.0) + math.exp(0.0))
    assert abs(p_micro - direct) < 1e-12
    assert schedule_operator(OperatorWeights(1.0, 0.0), 1.0, u=0.6) == MICRO_TUNE
    assert schedule_operator(OperatorWeights(1.0, 0.0), 1.0, u=0.8) == MACRO_MUTATE


def test_softmax_low_temperature_limit():
    p_micro, _ = schedule_probabilities(OperatorWeights(1.0, 0.0), 0.01)
    assert p_micro > 1 - 1e-6


@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-100, 100))
def test_softmax_shift_invariance(w1, w2, shift):
    base = schedule_probabilities(OperatorWeights(w1, w2), 1.0)
    shifted = schedule_probabilities(OperatorWeights(w1 + shift, w2 + shift), 1.0)
    assert abs(base[0] - shifted[0]) < 1e-12


CFG = SchedulerConfig()


def test_weight_update_positive():
    updated = update_weights(OperatorWeights(0.0, 0.0), MICRO_TUNE, 12.0, 10.0, CFG)
    assert updated.micro == pytest.approx(0.2)
    assert updated.macro == 0.0


def test_weight_update_penalized():
    updated = update_weights(OperatorWeights(0.0, 0.0), MICRO_TUNE, 8.0, 10.0, CFG)
    assert updated.micro == pytest.approx(-0.16)


def test_weight_update_failed_child_clamp():
    updated = update_weights(OperatorWeights(0.0, 0.0), MACRO_MUTATE, FAILED_SCORE, 10.0, CFG)
    assert updated.macro == pytest.approx(-0.8)
    assert updated.micro == 0.0


def test_weight_update_clamps_huge_gains():
    updated = update_weights(OperatorWeights(0.0, 0.0), MICRO_TUNE, 1e9, 1e-12, CFG)
    assert updated.micro == CFG.r_max


def test_weight_update_rejects_crossover():
    with pytest.raises(ValueError):
        update_weights(OperatorWeights(), CROSSOVER, 1.0, 1.0, CFG)


@given(
    st.sampled_from([MICRO_TUNE, MACRO_MUTATE]),
    st.floats(-100, 100),
    st.floats(-100, 100).filter(lambda s: abs(s) > 1e-6),
)
def test_weight_update_touches_one_coordinate(op, s_child, s_parent):
    before = OperatorWeights(0.3, -0.7)
    after = update_weights(before, op, s_child, s_parent, CFG)
    changed = [after.micro != before.micro, after.macro != before.macro]
    untouched = after.macro == before.macro if op == MICRO_TUNE else after.micro == before.micro
    assert untouched
    assert sum(changed) <= 1
    r_bar = max(-CFG.r_max, min(CFG.r_max, (s_child - s_parent) / max(abs(s_parent), CFG.epsilon_denom)))
    expected = r_bar if r_bar >= 0 else -CFG.lambda_penalty * abs(r_bar)
    delta = (after.micro - before.micro) if op == MICRO_TUNE else (after.macro - before.macro)
    assert delta == pytest.approx(expected)


# --- crossover partner sampling ----------------------------------------------


def _node(program, score, parent_id=None):
    failed = score is None
    return ProgramNode(
        program=program,
        score=FAILED_SCORE if failed else score,
        status=NodeStatus.FAILED if failed else NodeStatus.EVALUATED,
        parent_id=parent_id,
    )


@pytest.fixture()
def base_program(profile):
    return parse_source(SIMPLE_SOURCE, profile, entry_hint="solve")


def test_partner_weights_hand_enumeration(base_program):
    # root r (S=1) with children a (S=2), b (S=3); D_max=1; primary=a.
    # weight(b) = 1 * (1 - 0/1) = 1; weight(r) = 0.5 * 1 = 0.5 -> P(b) = 2/3.
    tree = SearchTree()
    r = tree.insert(_node(base_program, 1.0))
    a = tree.insert(_node(base_program, 2.0, parent_id=r))
    b = tree.insert(_node(base_program, 3.0, parent_id=r))
    weights = crossover_partner_weights(tree, a)
    assert weights[b] == pytest.approx(1.0)
    assert weights[r] == pytest.approx(0.5)
    hits = 0
    rng = random.Random(9)
    trials = 30000
    for _ in range(trials):
        if sample_crossover_partner(tree, a, rng) == b:
            hits += 1
    assert abs(hits / trials - 2 / 3) < 0.01


def test_partner_single_candidate(base_program):
    tree = SearchTree()
    a = tree.insert(_node(base_program, 1.0))
    b = tree.insert(_node(base_program, 2.0))
    assert sample_crossover_partner(tree, a, random.Random(0)) == b


def test_partner_none_available(base_program):
    tree = SearchTree()
    a = tree.insert(_node(base_program, 1.0))
    tree.insert(_node(base_program, None))
    with pytest.raises(NoPartner):
        sample_crossover_partner(tree, a, random.Random(0))


def test_partner_degenerate_scores_uniform(base_program):
    tree = SearchTree()
    ids = [tree.insert(_node(base_program, 2.0)) for _ in range(4)]
    weights = crossover_partner_weights(tree, ids[0])
    assert set(weights.values()) == {1.0}


def test_partner_never_primary(base_program):
    tree = SearchTree()
    ids = [tree.insert(_node(base_program, float(i))) for i in range(5)]
    rng = random.Random(1)
    for _ in range(200):
        assert sample_crossover_partner(tree, ids[2], rng) != ids[2]


def test_partner_weights_within_unit_interval(base_program):
    tree = SearchTree()
    r = tree.insert(_node(base_program, 0.0))
    a = tree.insert(_node(base_program, 5.0, parent_id=r))
    c = tree.insert(_node(base_program, 3.0, parent_id=a))
    d = tree.insert(_node(base_program, -2.0))  # disjoint lineage, LCA depth -1
    for primary in (a, c):
        for w in crossover_partner_weights(tree, primary).values():
            assert 0.0 <= w <= 1.0


# --- apply_operator -----------------------------------------------------------


MUTABLE_SOURCE = """\
import math

def solve(data):
    order = rank(data)
    return order[0]

def rank(data):
    return sorted(data)
"""


def _parent(profile, source=MUTABLE_SOURCE, thought="seed thought"):
    program = parse_source(source, profile, entry_hint="solve")
    node = ProgramNode(program=program, score=1.0, thought=thought)
    node.id = 0
    return node


def _services(profile, library, responder, limit=50):
    gateway = scripted_gateway(responder, limit=limit)
    return OperatorServices(
        profile=profile, library=library, gateway=gateway, task_description="toy task"
    ), gateway


def test_micro_tune_locality(profile, library):
    tuned_body = "def rank(data):\n    return sorted(data, reverse=False)"

    def respond(request):
        assert request.template_tag == "micro_tune"
        return f"```python\n{tuned_body}\n```"

    services, gateway = _services(profile, library, respond)
    parent = _parent(profile)
    rng = random.Random(0)
    result = apply_operator(MICRO_TUNE, [parent], services, 10, rng)
    assert not result.failed
    assert result.kind == MICRO_TUNE
    assert result.calls_used == 1 == gateway.ledger.used
    child = result.program
    assert child.get("rank").body == tuned_body
    assert child.get("solve").body == parent.program.get("solve").body
    assert child.preface == parent.program.preface
    assert result.thought == "seed thought"  # inherited


def test_micro_tune_rejects_altered_signature(profile, library):
    def respond(request):
        return "```python\ndef rank(data, extra):\n    return sorted(data)\n```"

    services, _ = _services(profile, library, respond)
    result = apply_operator(MICRO_TUNE, [_parent(profile)], services, 10, random.Random(0))
    assert result.failed
    assert "interface not preserved" in result.failure_reason


def test_micro_tune_falls_back_to_macro_without_mutable(profile, library):
    source = "def solve(data):\n    return data\n"

    def respond(request):
        if request.template_tag == "macro_mutate":
            return "```python\ndef solve(data):\n    return list(data)\n```\n{{rewrite}}"
        if request.template_tag == "role_analysis":
            return "[]"
        raise AssertionError(request.template_tag)

    services, _ = _services(profile, library, respond)
    parent = _parent(profile, source=source)
    result = apply_operator(MICRO_TUNE, [parent], services, 10, random.Random(0))
    assert result.kind == MACRO_MUTATE
    assert not result.failed


def test_macro_mutation_repairs_new_dependencies(profile, library):
    def respond(request):
        tag = request.template_tag
        if tag == "macro_mutate":
            return (
                "```python\nimport random\n\ndef solve(data):\n"
                "    seed = kick_move(data)\n    return seed\n```\n"
                "{{perturbation-driven restart}}"
            )
        if tag == "role_analysis":
            return '[{"name": "rank", "reason": "scoring rule"}]'
        if tag == "dependency_repair":
            assert "kick_move" in request.prompt
            return "```python\ndef kick_move(data):\n    return sorted(data)\n```"
        raise AssertionError(tag)

    services, gateway = _services(profile, library, respond)
    result = apply_operator(MACRO_MUTATE, [_parent(profile)], services, 20, random.Random(0))
    assert not result.failed
    assert result.repair_status is RepairStatus.CLOSED
    assert result.thought == "perturbation-driven restart"
    program = result.program
    assert "kick_move" in program.registry
    assert program.get("kick_move").role is Role.IMMUTABLE
    assert build_call_graph(program, profile).unresolved == set()
    # rank no longer reachable from the new entry -> pruned
    assert "rank" not in program.registry
    entry_roles = [e.name for e in program.entries if e.role is Role.ENTRY]
    assert entry_roles == ["solve"]
    # 1 generation + 1 role analysis + 1 repair
    assert result.calls_used == 3 == gateway.ledger.used


def test_macro_unparsable_after_retries(profile, library):
    def respond(request):
        if request.template_tag == "macro_mutate":
            return "I cannot help with that."
        raise AssertionError(request.template_tag)

    services, gateway = _services(profile, library, respond)
    result = apply_operator(MACRO_MUTATE, [_parent(profile)], services, 20, random.Random(0))
    assert result.failed
    assert result.calls_used == services.max_generation_attempts == gateway.ledger.used


def test_crossover_merges_parent_helpers(profile, library):
    source_b = (
        "def solve(data):\n    return shuffle_pick(data)\n\n"
        "def shuffle_pick(data):\n    return data[-1]\n"
    )

    def respond(request):
        tag = request.template_tag
        if tag == "crossover":
            assert "Parent A" in request.prompt and "Parent B" in request.prompt
            return (
                "```python\ndef solve(data):\n"
                "    return shuffle_pick(rank(data))\n```\n{{hybrid of ranking and sampling}}"
            )
        if tag == "role_analysis":
            return '[{"name": "rank"}, {"name": "shuffle_pick"}]'
        raise AssertionError(tag)

    services, _ = _services(profile, library, respond)
    parent_a = _parent(profile)
    parent_b = _parent(profile, source=source_b, thought="parent b thought")
    parent_b.id = 1
    result = apply_operator(CROSSOVER, [parent_a, parent_b], services, 20, random.Random(0))
    assert not result.failed
    program = result.program
    assert {"solve", "rank", "shuffle_pick"} == set(program.registry)
    assert build_call_graph(program, profile).unresolved == set()
    assert program.get("rank").role is Role.MUTABLE
    assert result.thought == "hybrid of ranking and sampling"


def test_crossover_requires_two_parents(profile, library):
    services, _ = _services(profile, library, lambda r: "")
    with pytest.raises(ValueError):
        apply_operator(CROSSOVER, [_parent(profile)], services, 5, random.Random(0))
