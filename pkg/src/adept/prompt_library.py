"""Prompt template rendering and generator-response parsing.

Templates live as data files next to this module, one per id, using
``{{name}}`` placeholder syntax.  The literal ``{{}}`` that several templates
use to request a boxed one-sentence description is not a placeholder (it has
no name) and passes through rendering untouched.
"""

from __future__ import annotations

import enum
import json
import logging
import re
from importlib import resources
from pathlib import Path

from .errors import MissingPlaceholder, NoCodeFound, UnknownTemplate, UnparsableRoleList
from .guest_profile import GuestProfile

log = logging.getLogger(__name__)

_PLACEHOLDER_RE = re.compile(r"\{\{([A-Za-z_]\w*)\}\}")
_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_THOUGHT_RE = re.compile(r"\{\{(.*?)\}\}", re.DOTALL)


class TemplateId(enum.Enum):
    ANALYSIS = "analysis"
    STRATEGY = "strategy"
    SEED_IMPLEMENTATION = "seed_implementation"
    MICRO_TUNE = "micro_tune"
    MACRO_MUTATE = "macro_mutate"
    CROSSOVER = "crossover"
    ROLE_ANALYSIS = "role_analysis"
    DEPENDENCY_REPAIR = "dependency_repair"


class TemplateLibrary:
    """Loads template bodies once and renders them with plain substitution."""

    def __init__(self, directory: str | Path | None = None):
        self._bodies: dict[TemplateId, str] = {}
        for tid in TemplateId:
            if directory is not None:
                text = (Path(directory) / f"{tid.value}.txt").read_text()
            else:
                text = (
                    resources.files("adept.prompts").joinpath(f"{tid.value}.txt").read_text()
                )
            self._bodies[tid] = text

    def body(self, template: TemplateId) -> str:
        try:
            return self._bodies[template]
        except KeyError:
            raise UnknownTemplate(str(template)) from None

    def placeholders(self, template: TemplateId) -> set[str]:
        return set(_PLACEHOLDER_RE.findall(self.body(template)))

    def render(self, template: TemplateId, context: dict[str, str]) -> str:
        body = self.body(template)

        def substitute(match: re.Match) -> str:
            name = match.group(1)
            if name not in context:
                raise MissingPlaceholder(name)
            return str(context[name])

        rendered = _PLACEHOLDER_RE.sub(substitute, body)
        leftover = _PLACEHOLDER_RE.search(rendered)
        if leftover:  # a context value itself contained a placeholder
            log.warning("rendered prompt still contains %r", leftover.group(0))
        return rendered


def extract_code(response: str, profile: GuestProfile) -> str:
    """First fenced code block, else the suffix from the first definition
    marker; fence lines are stripped.

    Unwrapping removes only the newline the closing fence sits on, so
    fencing any fence-free source is exactly invertible.
    """
    m = _FENCE_RE.search(response)
    if m:
        block = m.group(1)
        return block[:-1] if block.endswith("\n") else block
    lines = response.split("\n")
    for i, line in enumerate(lines):
        if line.startswith(profile.function_definition_marker):
            return "\n".join(lines[i:]).strip("\n")
    raise NoCodeFound("response holds no fenced block and no definition marker")


def extract_thought(response: str) -> str:
    """Content of the first ``{{...}}`` group; empty string when absent."""
    m = _THOUGHT_RE.search(response)
    if not m:
        log.warning("no boxed thought in response, recording empty thought")
        return ""
    return m.group(1).strip()


def parse_role_list(response: str) -> set[str]:
    """Names out of a JSON list of ``{"name": ..., "reason": ...}`` objects,
    tolerating surrounding prose and code fences."""
    candidates = [response.strip()]
    fence = _FENCE_RE.search(response)
    if fence:
        candidates.insert(0, fence.group(1).strip())
    decoder = json.JSONDecoder()
    for text in candidates:
        for start in [i for i, ch in enumerate(text) if ch == "["]:
            try:
                value, _ = decoder.raw_decode(text[start:])
            except json.JSONDecodeError:
                continue
            if isinstance(value, list):
                return _names_from(value)
    raise UnparsableRoleList("no JSON list found in response")


def _names_from(value: list) -> set[str]:
    names: set[str] = set()
    for item in value:
        if isinstance(item, dict) and isinstance(item.get("name"), str):
            names.add(item["name"])
        elif isinstance(item, str):
            names.add(item)
        else:
            raise UnparsableRoleList(f"unexpected role item {item!r}")
    return names
