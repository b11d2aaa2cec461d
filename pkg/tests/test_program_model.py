import pytest
from hypothesis import given, strategies as st

from adept.errors import EntryUnresolved, NoFunctionsFound
from adept.program_model import (
    Role,
    apply_role_partition,
    parse_source,
    render_source,
    structure_summary,
)

from conftest import SIMPLE_SOURCE


def test_parse_basic_decomposition(profile):
    program = parse_source(SIMPLE_SOURCE, profile, entry_hint="solve")
    assert program.preface == "import math"
    assert list(program.registry) == ["solve", "helper"]
    assert program.entry == "solve"
    assert program.entry_function.role is Role.ENTRY
    assert program.get("helper").role is Role.MUTABLE


def test_round_trip_identity(profile):
    rendered = render_source(parse_source(SIMPLE_SOURCE, profile, entry_hint="solve"))
    assert rendered == SIMPLE_SOURCE


def test_nested_definition_stays_in_body(profile):
    source = (
        "def solve(x):\n"
        "    def inner(y):\n"
        "        return y * 2\n"
        "    return inner(x)\n"
    )
    program = parse_source(source, profile)
    assert list(program.registry) == ["solve"]
    assert "def inner" in program.entry_function.body


def test_constants_belong_to_preface(profile):
    source = "import math\nSCALE = 3\n\ndef solve(x):\n    return x * SCALE\n"
    program = parse_source(source, profile)
    assert "SCALE = 3" in program.preface


def test_no_functions_found(profile):
    with pytest.raises(NoFunctionsFound):
        parse_source("import math\nx = 1\n", profile)
    with pytest.raises(NoFunctionsFound):
        parse_source("", profile)


def test_entry_resolution_hint_then_convention(profile):
    source = "def helper(x):\n    return x\n\ndef solve_it(x):\n    return helper(x)\n"
    assert parse_source(source, profile).entry == "solve_it"
    assert parse_source(source, profile, entry_hint="helper").entry == "helper"
    with pytest.raises(EntryUnresolved):
        parse_source("def run(x):\n    return x\n", profile)


def test_role_partition(profile):
    source = "def solve(x):\n    return dist(x) + helper(x)\n\ndef helper(x):\n    return x\n\ndef dist(x):\n    return x\n"
    program = parse_source(source, profile)
    partitioned = apply_role_partition(program, {"helper"})
    assert partitioned.get("helper").role is Role.MUTABLE
    assert partitioned.get("dist").role is Role.IMMUTABLE
    assert partitioned.get("solve").role is Role.ENTRY
    # unknown names are ignored, result identical to omitting them
    again = apply_role_partition(program, {"helper", "ghost"})
    assert again == partitioned
    # empty set -> everything immutable except entry
    bare = apply_role_partition(program, set())
    assert all(e.role is Role.IMMUTABLE for e in bare.entries if e.name != "solve")


def test_role_partition_preserves_text_and_order(profile):
    program = parse_source(SIMPLE_SOURCE, profile, entry_hint="solve")
    partitioned = apply_role_partition(program, set())
    assert partitioned.preface == program.preface
    assert [e.name for e in partitioned.entries] == [e.name for e in program.entries]
    assert [e.body for e in partitioned.entries] == [e.body for e in program.entries]


def test_roles_cover_registry(profile):
    program = parse_source(SIMPLE_SOURCE, profile, entry_hint="solve")
    roles = {e.name: e.role for e in program.entries}
    entry_names = [n for n, r in roles.items() if r is Role.ENTRY]
    assert entry_names == ["solve"]
    assert set(roles) == set(program.registry)


def test_profile_loadable_from_file(tmp_path):
    from adept.guest_profile import load_profile

    doc = {
        "function_definition_marker": "def ",
        "import_line_marker": ["import ", "from "],
        "builtin_symbols": ["len", "range", "min"],
        "entry_prefix": "main",
    }
    path = tmp_path / "profile.json"
    path.write_text(__import__("json").dumps(doc))
    loaded = load_profile(path)
    assert loaded.builtin_symbols == {"len", "range", "min"}
    assert loaded.entry_prefix == "main"
    assert parse_source("def main_solver(x):\n    return x\n", loaded).entry == "main_solver"


def test_structure_summary(profile):
    source = 'def solve(x):\n    """Entry point."""\n    return helper(x)\n\ndef helper(x):\n    return x\n'
    summary = structure_summary(parse_source(source, profile))
    assert "def solve(x):" in summary
    assert "Entry point." in summary
    assert "return helper" not in summary


_names = st.sampled_from(["alpha", "beta", "gamma", "delta"])


@st.composite
def canonical_programs(draw):
    names = draw(st.lists(_names, min_size=1, max_size=4, unique=True))
    if not any(n.startswith("solve") for n in names):
        names[0] = "solve_" + names[0]
    blocks = []
    if draw(st.booleans()):
        blocks.append("import math")
    for name in names:
        body_lines = draw(st.integers(min_value=1, max_value=3))
        body = "\n".join(f"    x{i} = {i}" for i in range(body_lines))
        blocks.append(f"def {name}(a, b):\n{body}\n    return a")
    return "\n\n".join(blocks) + "\n"


@given(canonical_programs())
def test_parse_render_fixpoint(source):
    profile = __import__("adept.guest_profile", fromlist=["default_profile"]).default_profile()
    program = parse_source(source, profile)
    assert render_source(program) == source
    assert parse_source(render_source(program), profile, entry_hint=program.entry) == program


@given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=400))
def test_parse_total_with_valid_definition(junk):
    """Any text holding one well-formed definition parses, or at worst fails
    entry resolution; it never crashes with anything else."""
    profile = __import__("adept.guest_profile", fromlist=["default_profile"]).default_profile()
    source = junk + "\ndef solve_anything(x):\n    return x\n"
    program = parse_source(source, profile)
    assert "solve_anything" in program.registry


@given(st.text(max_size=200))
def test_parse_error_surface_is_closed(text):
    profile = __import__("adept.guest_profile", fromlist=["default_profile"]).default_profile()
    try:
        parse_source(text, profile)
    except (NoFunctionsFound, EntryUnresolved):
        pass
