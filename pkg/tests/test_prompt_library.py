import re

import pytest
from hypothesis import given, strategies as st

from adept import guest_profile as profile_mod
from adept.errors import MissingPlaceholder, NoCodeFound, UnparsableRoleList
from adept.prompt_library import (
    TemplateId,
    extract_code,
    extract_thought,
    parse_role_list,
)

PLACEHOLDER_RE = re.compile(r"\{\{[A-Za-z_]\w*\}\}")


def test_all_templates_load(library):
    for tid in TemplateId:
        assert library.body(tid)


def test_render_repair_template(library):
    text = library.render(
        TemplateId.DEPENDENCY_REPAIR,
        {
            "task_description": "toy task",
            "MAIN_FUNC_CODE": "def solve(x):\n    return helper(x)",
            "missing_func_name": "helper",
        },
    )
    assert "helper" in text
    assert "def solve(x):" in text
    assert not PLACEHOLDER_RE.search(text)


def test_render_missing_placeholder(library):
    with pytest.raises(MissingPlaceholder) as err:
        library.render(TemplateId.ANALYSIS, {})
    assert err.value.name == "task_description"


def test_render_deterministic(library):
    ctx = {"task_description": "abc"}
    assert library.render(TemplateId.ANALYSIS, ctx) == library.render(TemplateId.ANALYSIS, ctx)


def test_render_never_leaves_named_placeholders(library):
    contexts = {
        TemplateId.ANALYSIS: {"task_description": "t"},
        TemplateId.STRATEGY: {"ANALYSIS_RESULT": "a", "HISTORY_SUMMARIES": "h"},
        TemplateId.SEED_IMPLEMENTATION: {"task_description": "t", "STRATEGY_PLAN": "s", "FUNCTION_TEMPLATE": "f"},
        TemplateId.MICRO_TUNE: {"task_description": "t", "FUNC_CODE": "c"},
        TemplateId.MACRO_MUTATE: {"task_description": "t", "PREVIOUS_THOUGHT": "p", "CURRENT_CODE": "c"},
        TemplateId.CROSSOVER: {
            "task_description": "t", "THOUGHT_A": "a", "CODE_A_MAIN": "ca",
            "THOUGHT_B": "b", "CODE_B_MAIN": "cb",
        },
        TemplateId.ROLE_ANALYSIS: {"task_description": "t", "code_structure": "s"},
        TemplateId.DEPENDENCY_REPAIR: {"task_description": "t", "MAIN_FUNC_CODE": "m", "missing_func_name": "n"},
    }
    for tid in TemplateId:
        rendered = library.render(tid, contexts[tid])
        assert not PLACEHOLDER_RE.search(rendered), tid


def test_extract_code_fenced(profile):
    response = "Sure:\n```python\ndef f(x):\n    return x\n```\ntrailing prose"
    assert extract_code(response, profile) == "def f(x):\n    return x"


def test_extract_code_bare_definition(profile):
    response = "def f(x):\n    return x\n"
    assert extract_code(response, profile) == "def f(x):\n    return x"


def test_extract_code_prose_raises(profile):
    with pytest.raises(NoCodeFound):
        extract_code("there is no code here", profile)


def test_extract_code_fence_round_trip(profile):
    source = "import math\n\ndef f(x):\n    return math.sqrt(x)\n"
    assert extract_code(f"```python\n{source}```", profile) == source.strip("\n")


@given(st.text(max_size=300).filter(lambda s: "```" not in s))
def test_extract_code_unwraps_fences_exactly(source):
    assert extract_code(f"```python\n{source}\n```", profile_mod.default_profile()) == source


def test_extract_thought():
    assert extract_thought("head {{Greedy min-degree construction}} tail") == "Greedy min-degree construction"
    assert extract_thought("no braces at all") == ""
    assert extract_thought("{{first}} and {{second}}") == "first"


@pytest.mark.parametrize(
    "response,expected",
    [
        ('[{"name": "score_fn", "reason": "heuristic"}]', {"score_fn"}),
        ("[]", set()),
        ('prose before\n```json\n[{"name": "a"}, {"name": "b"}]\n```\nprose after', {"a", "b"}),
        ('the list is ["x", "y"] as requested', {"x", "y"}),
    ],
)
def test_parse_role_list(response, expected):
    assert parse_role_list(response) == expected


def test_parse_role_list_unparsable():
    with pytest.raises(UnparsableRoleList):
        parse_role_list("no list in sight")
