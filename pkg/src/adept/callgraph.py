"""Call graphs over structured programs: unresolved-symbol computation, the
generator-backed repair loop, and dead-code pruning."""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass

from .errors import BudgetExhausted, NoCodeFound
from .guest_profile import GuestProfile
from .program_model import FunctionEntry, Role, StructuredProgram

log = logging.getLogger(__name__)

_CALL_RE = re.compile(r"(?<![\w.])([A-Za-z_]\w*)\(")
_DEF_RE = re.compile(r"(?m)^\s*def\s+([A-Za-z_]\w*)")
_CLASS_RE = re.compile(r"(?m)^\s*class\s+([A-Za-z_]\w*)")
_ASSIGN_RE = re.compile(r"(?m)^\s*([A-Za-z_]\w*(?:\s*,\s*[A-Za-z_]\w*)*)\s*(?:[-+*/%&|^@]|//|\*\*|>>|<<)?=(?!=)")
_FOR_RE = re.compile(r"\bfor\s+([A-Za-z_]\w*(?:\s*,\s*[A-Za-z_]\w*)*)\s+in\b")
_LAMBDA_RE = re.compile(r"\blambda\s+([^:]*):")
_WITH_AS_RE = re.compile(r"\bas\s+([A-Za-z_]\w*)")
_IMPORT_RE = re.compile(r"^\s*import\s+(.+)$")
_FROM_IMPORT_RE = re.compile(r"^\s*from\s+[\w.]+\s+import\s+(.+)$")


@dataclass(frozen=True)
class CallGraph:
    vertices: frozenset[str]
    edges: frozenset[tuple[str, str]]
    defined: frozenset[str]
    builtins: frozenset[str]
    unresolved: frozenset[str]


class RepairStatus(enum.Enum):
    CLOSED = "closed"
    INCOMPLETE_BUDGET_EXHAUSTED = "incomplete_budget_exhausted"


@dataclass(frozen=True)
class RepairOutcome:
    program: StructuredProgram
    status: RepairStatus
    calls_used: int


def strip_comments_and_strings(source: str) -> str:
    """Blank out string literals and comments so identifier scans do not pick
    up prose.  Single-pass character scanner, handles triple quotes and
    escapes; stripped spans are replaced by spaces to keep offsets stable."""
    out = list(source)
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "#":
            while i < n and source[i] != "\n":
                out[i] = " "
                i += 1
        elif ch in "\"'":
            quote = source[i : i + 3] if source[i : i + 3] in ('"""', "'''") else ch
            out[i : i + len(quote)] = " " * len(quote)
            i += len(quote)
            while i < n:
                if source[i] == "\\":
                    out[i] = " "
                    if i + 1 < n:
                        out[i + 1] = " "
                    i += 2
                    continue
                if source.startswith(quote, i):
                    out[i : i + len(quote)] = " " * len(quote)
                    i += len(quote)
                    break
                if source[i] != "\n":
                    out[i] = " "
                i += 1
        else:
            i += 1
    return "".join(out)


def _split_names(chunk: str) -> set[str]:
    return {part.strip() for part in chunk.split(",") if part.strip()}


def _local_symbols(body: str) -> set[str]:
    """Names that resolve locally inside one function body: parameters,
    assignment targets, loop variables, nested def/class names."""
    local: set[str] = set()
    local.update(_DEF_RE.findall(body))
    local.update(_CLASS_RE.findall(body))
    for m in _ASSIGN_RE.finditer(body):
        local.update(_split_names(m.group(1)))
    for m in _FOR_RE.finditer(body):
        local.update(_split_names(m.group(1)))
    for m in _WITH_AS_RE.finditer(body):
        local.add(m.group(1))
    for m in _LAMBDA_RE.finditer(body):
        for part in m.group(1).split(","):
            name = part.split("=")[0].strip().lstrip("*")
            if name.isidentifier():
                local.add(name)
    first_line = body.split("\n", 1)[0]
    if "(" in first_line:
        params = first_line[first_line.index("(") + 1 :].rsplit(")", 1)[0]
        for part in params.split(","):
            name = part.split("=")[0].split(":")[0].strip().lstrip("*")
            if name.isidentifier():
                local.add(name)
    return local


def imported_names(preface: str) -> set[str]:
    """Top-level names bound by preface import lines (module aliases and
    from-imported symbols)."""
    names: set[str] = set()
    for line in preface.split("\n"):
        m = _FROM_IMPORT_RE.match(line)
        if m:
            for part in m.group(1).split(","):
                bits = part.strip().split()
                names.add(bits[-1] if "as" in bits else bits[0].split(".")[0])
            continue
        m = _IMPORT_RE.match(line)
        if m:
            for part in m.group(1).split(","):
                bits = part.strip().split()
                names.add(bits[-1] if "as" in bits else bits[0].split(".")[0])
    return {n for n in names if n.isidentifier()}


def callees(entry: FunctionEntry, profile: GuestProfile) -> set[str]:
    cleaned = strip_comments_and_strings(entry.body)
    local = _local_symbols(cleaned)
    found = set(_CALL_RE.findall(cleaned))
    return {n for n in found if n not in profile.keywords and n not in local}


def build_call_graph(program: StructuredProgram, profile: GuestProfile) -> CallGraph:
    defined = frozenset(program.registry)
    builtins = frozenset(profile.builtin_symbols) | frozenset(imported_names(program.preface))
    edges: set[tuple[str, str]] = set()
    for entry in program.entries:
        for callee in callees(entry, profile):
            edges.add((entry.name, callee))
    vertices = set(defined)
    for u, v in edges:
        vertices.add(u)
        vertices.add(v)
    unresolved = frozenset(
        v for _, v in edges if v not in defined and v not in builtins
    )
    return CallGraph(frozenset(vertices), frozenset(edges), defined, builtins, unresolved)


def prune_unreachable(program: StructuredProgram, profile: GuestProfile) -> StructuredProgram:
    """Keep exactly the registry entries reachable from the entry function."""
    graph = build_call_graph(program, profile)
    reachable = {program.entry}
    stack = [program.entry]
    adjacency: dict[str, set[str]] = {}
    for u, v in graph.edges:
        adjacency.setdefault(u, set()).add(v)
    while stack:
        node = stack.pop()
        for nxt in adjacency.get(node, ()):
            if nxt in graph.defined and nxt not in reachable:
                reachable.add(nxt)
                stack.append(nxt)
    kept = tuple(e for e in program.entries if e.name in reachable)
    if len(kept) == len(program.entries):
        return program
    return StructuredProgram(program.preface, kept, program.entry)


def _repair_context(program: StructuredProgram, missing: str, limit: int) -> str:
    """Entry body plus every body that calls the missing name, truncated."""
    chunks = [program.entry_function.body]
    pattern = re.compile(rf"(?<![\w.]){re.escape(missing)}\(")
    for entry in program.entries:
        if entry.name != program.entry and pattern.search(entry.body):
            chunks.append(entry.body)
    context = "\n\n".join(chunks)
    return context[:limit]


def parse_fragment(
    code: str, profile: GuestProfile
) -> tuple[list[str], list[FunctionEntry]]:
    """Split a generated snippet into import lines and top-level definitions.

    Unlike :func:`parse_source` this has no entry concept and tolerates
    fragments that are imports-only or defs-only.
    """
    lines = code.split("\n")
    marker = profile.function_definition_marker
    def_rows = [i for i, line in enumerate(lines) if line.startswith(marker)]
    first_def = def_rows[0] if def_rows else len(lines)
    imports = [line for line in lines[:first_def] if profile.is_import_line(line)]
    entries: list[FunctionEntry] = []
    bounds = def_rows + [len(lines)]
    for start, end in zip(bounds, bounds[1:]):
        block = lines[start:end]
        while block and not block[-1].strip():
            block.pop()
        m = _DEF_RE.match(block[0])
        if not m:
            continue
        entries.append(
            FunctionEntry(m.group(1), block[0], "\n".join(block), role=Role.IMMUTABLE)
        )
    if not imports and not entries:
        raise NoCodeFound("generated snippet holds no imports and no definitions")
    return imports, entries


def merge_generated_code(
    program: StructuredProgram, code: str, profile: GuestProfile
) -> StructuredProgram:
    """Fold generated definitions into the registry (role Immutable) and new
    import lines into the preface.  Existing names are never clobbered."""
    imports, entries = parse_fragment(code, profile)
    preface = program.preface
    have = set(preface.split("\n"))
    new_imports = [line for line in imports if line not in have]
    if new_imports:
        preface = "\n".join(filter(None, [preface, "\n".join(new_imports)]))
    merged = program.with_preface(preface)
    for entry in entries:
        if entry.name in merged.registry:
            log.warning("repair response redefines %r, keeping existing", entry.name)
            continue
        merged = merged.add_function(entry)
    return merged


def repair_loop(
    program: StructuredProgram,
    generator,
    budget: int,
    profile: GuestProfile,
    *,
    library=None,
    task_description: str = "",
    max_context_chars: int = 4000,
    temperature: float = 0.2,
) -> RepairOutcome:
    """Drive the program to dependency closure, one missing name per call.

    Missing names are handled in lexicographic order so a bad response is
    attributable to a single name.  An unparsable response consumes its call
    and the loop retries with the next budget unit.  ``generator`` is any
    object with a ``complete(prompt, tag=..., phase=..., temperature=...)``
    method returning text; ``library`` must render the dependency-repair
    template when given ``(TemplateId.DEPENDENCY_REPAIR, context)``.
    """
    from .prompt_library import TemplateId, extract_code

    if budget < 0:
        raise ValueError("budget must be >= 0")
    calls_used = 0
    current = program
    graph = build_call_graph(current, profile)
    while graph.unresolved:
        if calls_used >= budget:
            return RepairOutcome(current, RepairStatus.INCOMPLETE_BUDGET_EXHAUSTED, calls_used)
        missing = min(graph.unresolved)
        prompt = library.render(
            TemplateId.DEPENDENCY_REPAIR,
            {
                "task_description": task_description,
                "MAIN_FUNC_CODE": _repair_context(current, missing, max_context_chars),
                "missing_func_name": missing,
            },
        )
        try:
            text = generator.complete(
                prompt,
                tag=TemplateId.DEPENDENCY_REPAIR.value,
                phase="repair",
                temperature=temperature,
            )
        except BudgetExhausted:
            return RepairOutcome(current, RepairStatus.INCOMPLETE_BUDGET_EXHAUSTED, calls_used)
        calls_used += 1
        try:
            code = extract_code(text, profile)
            current = merge_generated_code(current, code, profile)
        except NoCodeFound:
            log.warning("unparsable repair response for %r, retrying", missing)
        graph = build_call_graph(current, profile)
    return RepairOutcome(current, RepairStatus.CLOSED, calls_used)
