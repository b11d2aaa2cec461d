"""Guest-language profile: the line markers and builtin names that make
structural parsing and call-graph analysis language-agnostic."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

# Callable builtins of the default guest language (Python), plus the one
# numeric library pinned in the runner environment.
DEFAULT_BUILTINS = frozenset(
    """abs aiter all any anext ascii bin bool breakpoint bytearray bytes callable
    chr classmethod compile complex delattr dict dir divmod enumerate eval exec
    filter float format frozenset getattr globals hasattr hash hex id input int
    isinstance issubclass iter len list locals map max memoryview min next object
    oct open ord pow print property range repr reversed round set setattr slice
    sorted staticmethod str sum super tuple type vars zip __import__
    Exception BaseException ValueError TypeError KeyError IndexError RuntimeError
    StopIteration ZeroDivisionError ArithmeticError AttributeError OverflowError
    NotImplementedError FloatingPointError MemoryError RecursionError
    numpy""".split()
)

DEFAULT_KEYWORDS = frozenset(
    """False None True and as assert async await break case class continue def
    del elif else except finally for from global if import in is lambda match
    nonlocal not or pass raise return try while with yield""".split()
)


@dataclass(frozen=True)
class GuestProfile:
    """How to recognize structure in guest source text.

    ``entry_name`` pins the entry function explicitly; otherwise the first
    defined function whose name starts with ``entry_prefix`` is the entry.
    """

    function_definition_marker: str = "def "
    import_line_markers: tuple[str, ...] = ("import ", "from ")
    builtin_symbols: frozenset[str] = DEFAULT_BUILTINS
    keywords: frozenset[str] = DEFAULT_KEYWORDS
    entry_prefix: str = "solve"
    entry_name: str | None = None

    def __post_init__(self):
        if not self.function_definition_marker:
            raise ValueError("function_definition_marker must be non-empty")
        if not self.import_line_markers or any(not m for m in self.import_line_markers):
            raise ValueError("import line markers must be non-empty strings")
        if not self.builtin_symbols:
            raise ValueError("builtin_symbols must be non-empty")

    def is_import_line(self, line: str) -> bool:
        return any(line.startswith(m) for m in self.import_line_markers)


def default_profile(entry_name: str | None = None) -> GuestProfile:
    return GuestProfile(entry_name=entry_name)


def load_profile(path: str | Path) -> GuestProfile:
    """Load a profile from a JSON document.

    Recognized fields: function_definition_marker, import_line_marker (string
    or list of strings), builtin_symbols, entry_prefix, entry_name, keywords.
    """
    doc = json.loads(Path(path).read_text())
    markers = doc.get("import_line_marker", list(GuestProfile.import_line_markers))
    if isinstance(markers, str):
        markers = [markers]
    kwargs: dict = {
        "function_definition_marker": doc.get("function_definition_marker", "def "),
        "import_line_markers": tuple(markers),
        "entry_prefix": doc.get("entry_prefix", "solve"),
        "entry_name": doc.get("entry_name"),
    }
    if "builtin_symbols" in doc:
        kwargs["builtin_symbols"] = frozenset(doc["builtin_symbols"])
    if "keywords" in doc:
        kwargs["keywords"] = frozenset(doc["keywords"])
    return GuestProfile(**kwargs)
