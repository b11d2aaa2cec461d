"""Structural representation of candidate solver programs.

A program is a preface (imports and global constants) plus an ordered
registry of top-level functions, each carrying a mutation role.  Nested
definitions stay inside their enclosing body as opaque text so the registry
matches the top-level call-graph vertices the repair loop reasons about.
"""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, replace

from .errors import EntryUnresolved, NoFunctionsFound
from .guest_profile import GuestProfile

log = logging.getLogger(__name__)

_NAME_RE = re.compile(r"^\s*def\s+([A-Za-z_]\w*)")
_ASSIGN_LINE_RE = re.compile(r"^[A-Za-z_]\w*\s*(?::[^=]+)?=(?!=)")


class Role(enum.Enum):
    ENTRY = "entry"
    MUTABLE = "mutable"
    IMMUTABLE = "immutable"


@dataclass(frozen=True)
class FunctionEntry:
    name: str
    signature: str
    body: str
    role: Role = Role.MUTABLE

    def __post_init__(self):
        if not self.body.startswith(self.signature):
            raise ValueError(f"body of {self.name!r} does not start with its signature")


@dataclass(frozen=True)
class StructuredProgram:
    preface: str
    entries: tuple[FunctionEntry, ...]
    entry: str

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("duplicate function names in registry")
        if self.entry not in names:
            raise ValueError(f"entry {self.entry!r} not in registry")
        entry_roles = [e.name for e in self.entries if e.role is Role.ENTRY]
        if entry_roles != [self.entry]:
            raise ValueError("exactly the entry function must carry the Entry role")

    @property
    def registry(self) -> dict[str, FunctionEntry]:
        return {e.name: e for e in self.entries}

    def get(self, name: str) -> FunctionEntry:
        return self.registry[name]

    @property
    def entry_function(self) -> FunctionEntry:
        return self.registry[self.entry]

    def functions_with_role(self, role: Role) -> list[FunctionEntry]:
        return [e for e in self.entries if e.role is role]

    def replace_function(self, name: str, new_entry: FunctionEntry) -> "StructuredProgram":
        """Return a copy with ``name`` replaced in place (order preserved)."""
        if new_entry.name != name and new_entry.name in self.registry:
            raise ValueError(f"replacement name {new_entry.name!r} already registered")
        entries = tuple(new_entry if e.name == name else e for e in self.entries)
        entry = new_entry.name if name == self.entry else self.entry
        return StructuredProgram(self.preface, entries, entry)

    def add_function(self, entry: FunctionEntry) -> "StructuredProgram":
        if entry.name in self.registry:
            raise ValueError(f"function {entry.name!r} already registered")
        return StructuredProgram(self.preface, self.entries + (entry,), self.entry)

    def with_preface(self, preface: str) -> "StructuredProgram":
        return StructuredProgram(preface, self.entries, self.entry)


def _entry_candidate(names: list[str], profile: GuestProfile, hint: str | None) -> str:
    if hint and hint in names:
        return hint
    if profile.entry_name and profile.entry_name in names:
        return profile.entry_name
    for name in names:
        if name.startswith(profile.entry_prefix):
            return name
    raise EntryUnresolved(
        f"no entry among {names}: hint={hint!r}, prefix={profile.entry_prefix!r}"
    )


def parse_source(
    text: str,
    profile: GuestProfile,
    entry_hint: str | None = None,
) -> StructuredProgram:
    """Decompose guest source into preface + function registry.

    Only lines starting with the definition marker at column zero open a new
    registry entry, so nested definitions remain body text.  After parsing,
    the entry function has role Entry and every other function is Mutable
    until a role-analysis pass refines the partition.
    """
    if not text:
        raise NoFunctionsFound("empty source")
    lines = text.split("\n")
    marker = profile.function_definition_marker
    def_rows = [
        i for i, line in enumerate(lines)
        if line.startswith(marker) and _NAME_RE.match(line)
    ]
    if not def_rows:
        raise NoFunctionsFound("no function definition marker in source")

    preface_lines: list[str] = []
    for line in lines[: def_rows[0]]:
        stripped = line.strip()
        if (
            not stripped
            or stripped.startswith("#")
            or profile.is_import_line(line)
            or _ASSIGN_LINE_RE.match(line)
        ):
            preface_lines.append(line)
        else:
            log.warning("dropping non-preface line before first definition: %r", stripped)
    preface = "\n".join(preface_lines).strip("\n")

    entries: list[FunctionEntry] = []
    bounds = def_rows + [len(lines)]
    for start, end in zip(bounds, bounds[1:]):
        block = lines[start:end]
        while block and not block[-1].strip():
            block.pop()
        signature = block[0]
        name = _NAME_RE.match(signature).group(1)
        if any(e.name == name for e in entries):
            log.warning("duplicate definition of %r, keeping the last one", name)
            entries = [e for e in entries if e.name != name]
        entries.append(FunctionEntry(name, signature, "\n".join(block)))

    entry = _entry_candidate([e.name for e in entries], profile, entry_hint)
    entries = [
        replace(e, role=Role.ENTRY if e.name == entry else Role.MUTABLE) for e in entries
    ]
    return StructuredProgram(preface, tuple(entries), entry)


def render_source(program: StructuredProgram) -> str:
    """Preface first, then registry entries in stored order, single blank
    lines between blocks, single trailing newline."""
    blocks = []
    if program.preface:
        blocks.append(program.preface)
    blocks.extend(e.body for e in program.entries)
    return "\n\n".join(blocks) + "\n"


def apply_role_partition(
    program: StructuredProgram, mutable_names: set[str]
) -> StructuredProgram:
    """Mark ``mutable_names`` Mutable and everything else (bar the entry)
    Immutable.  Unknown names are ignored with a warning."""
    known = set(program.registry)
    for name in sorted(mutable_names - known):
        log.warning("role partition names unknown function %r, ignoring", name)
    entries = tuple(
        e
        if e.role is Role.ENTRY
        else replace(e, role=Role.MUTABLE if e.name in mutable_names else Role.IMMUTABLE)
        for e in program.entries
    )
    return StructuredProgram(program.preface, entries, program.entry)


def structure_summary(program: StructuredProgram) -> str:
    """Signatures plus first docstring line per function, for role analysis."""
    parts = []
    for e in program.entries:
        parts.append(e.signature)
        doc = _first_docstring_line(e.body)
        if doc:
            parts.append(f'    """{doc}"""')
    return "\n".join(parts)


def _first_docstring_line(body: str) -> str | None:
    lines = body.split("\n")
    for line in lines[1:]:
        stripped = line.strip()
        if not stripped:
            continue
        for quote in ('"""', "'''"):
            if stripped.startswith(quote):
                rest = stripped[len(quote):]
                return rest.split(quote)[0].strip() or None
        return None
    return None
