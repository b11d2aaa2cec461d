"""Deterministic offline generator double.

Keyed purely on the incoming prompt (stable hash), so runs are reproducible
and checkpoint resume needs no replay state.  Seed implementations come from
the baseline sources; macro-mutations deliberately call helpers that do not
exist yet so the repair loop gets exercised end to end.
"""

from __future__ import annotations

import hashlib
import json
import re

from . import baselines, cops
from .gateway import GenerationRequest, MockBackend

_DEF_RE = re.compile(r"(?m)^def\s+([A-Za-z_]\w*)")
_MISSING_RE = re.compile(r"helper function\s+`?([A-Za-z_]\w*)`?")

_STRATEGY_BLURBS = (
    "GreedyDegree: grow the solution by repeatedly taking the locally best candidate.",
    "RandomizedRestart: build many randomized solutions and keep the best.",
    "OrderFirst: fix a global priority ordering, then assign greedily along it.",
    "CheapestInsertion: always extend with the cheapest feasible insertion.",
    "TwoPhase: construct a rough solution, then repair and tighten it.",
    "RegretBased: prefer candidates whose postponement is most expensive.",
    "ClusterThenRoute: group related items first, solve each group separately.",
    "SavingsMerge: start from singleton parts and merge while profitable.",
)

_MIS_MACRO_MAIN_A = '''```python
def solve_mis(adjacency_matrix, n_nodes):
    order = rank_vertices_by_degree(adjacency_matrix, n_nodes)
    chosen = []
    for v in order:
        ok = True
        for u in chosen:
            if adjacency_matrix[v][u]:
                ok = False
                break
        if ok:
            chosen.append(v)
    return sorted(chosen)
```
{{Greedy over an ascending-degree vertex ordering with pairwise conflict checks}}'''

_MIS_MACRO_MAIN_B = '''```python
def solve_mis(adjacency_matrix, n_nodes):
    order = rank_vertices_by_degree(adjacency_matrix, n_nodes)
    chosen = expand_independent_set(adjacency_matrix, order)
    return sorted(chosen)
```
{{Two-stage design: rank vertices by degree, then expand an independent set along the ranking}}'''

_REPAIR_TABLE = {
    "rank_vertices_by_degree": '''```python
def rank_vertices_by_degree(adjacency_matrix, n_nodes):
    degrees = []
    for v in range(n_nodes):
        degrees.append((sum(adjacency_matrix[v]), v))
    degrees.sort()
    return [v for _, v in degrees]
```''',
    "expand_independent_set": '''```python
def expand_independent_set(adjacency_matrix, order):
    chosen = []
    for v in order:
        ok = True
        for u in chosen:
            if adjacency_matrix[v][u]:
                ok = False
                break
        if ok:
            chosen.append(v)
    return chosen
```''',
}


def _stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def _section(prompt: str, start_marker: str, end_marker: str) -> str:
    start = prompt.index(start_marker) + len(start_marker)
    end = prompt.index(end_marker, start)
    return prompt[start:end].strip("\n")


def _crash_source(entry: str) -> str:
    return f"def {entry}(*args, **kwargs):\n    raise RuntimeError('injected failure')\n"


class DemoResponder:
    """Callable backend body: (GenerationRequest) -> response text."""

    def __init__(self, problem: str, failure_rate: float = 0.0):
        self.problem = problem
        self.failure_rate = failure_rate
        self.entry = cops.entry_name(problem)
        greedy = baselines.baseline_guest_source(problem, baselines.GREEDY_CONSTRUCTIVE)
        rand = baselines.baseline_guest_source(problem, baselines.RANDOM_FEASIBLE)
        self.seed_variants = [
            greedy,
            rand,
            "SEED_VARIANT = 2\n\n" + greedy,
            "SEED_VARIANT = 3\n\n" + rand,
            "SEED_VARIANT = 4\n\n" + greedy,
        ]

    def _inject_failure(self, prompt: str) -> bool:
        if self.failure_rate <= 0:
            return False
        return (_stable_hash("fail:" + prompt) % 1000) < self.failure_rate * 1000

    def __call__(self, request: GenerationRequest) -> str:
        tag = request.template_tag
        prompt = request.prompt
        handler = getattr(self, f"_on_{tag}", None)
        if handler is None:
            raise ValueError(f"demo responder has no handler for template {tag!r}")
        return handler(prompt)

    def _on_analysis(self, prompt: str) -> str:
        return (
            f"Structured analysis for {self.problem}: the task is a constrained "
            "combinatorial optimization problem. Feasibility must be maintained at "
            "every construction step; greedy construction, randomized restarts and "
            "local improvement are all viable designs."
        )

    def _on_strategy(self, prompt: str) -> str:
        return _STRATEGY_BLURBS[_stable_hash(prompt) % len(_STRATEGY_BLURBS)]

    def _on_seed_implementation(self, prompt: str) -> str:
        if self._inject_failure(prompt):
            return f"```python\n{_crash_source(self.entry)}```\n{{{{Deliberately broken seed}}}}"
        source = self.seed_variants[_stable_hash(prompt) % len(self.seed_variants)]
        return f"```python\n{source}```\n{{{{Constructive baseline that keeps every step feasible}}}}"

    def _on_micro_tune(self, prompt: str) -> str:
        func = _section(prompt, "Current Implementation:", "\nTask:")
        if self._inject_failure(prompt):
            sig = func.split("\n", 1)[0]
            return f"```python\n{sig}\n    raise RuntimeError('injected failure')\n```"
        return f"```python\n{func}\n```"

    def _on_macro_mutate(self, prompt: str) -> str:
        if self._inject_failure(prompt):
            return f"```python\n{_crash_source(self.entry)}```\n{{{{Broken rewrite}}}}"
        if self.problem == "mis":
            variant = _stable_hash("macro:" + prompt) % 2
            return _MIS_MACRO_MAIN_A if variant == 0 else _MIS_MACRO_MAIN_B
        current = _section(prompt, "Current Function:", "\nTask:")
        return f"```python\n{current}\n```\n{{{{Kept the proven workflow after exploring alternatives}}}}"

    def _on_crossover(self, prompt: str) -> str:
        code_a = _section(prompt, "Code: ", "\n\nParent B:")
        return f"```python\n{code_a}\n```\n{{{{Hybrid favoring the stronger parent's control flow}}}}"

    def _on_role_analysis(self, prompt: str) -> str:
        structure = _section(prompt, "(Signatures & Docstrings only):", "\nTask:")
        names = [n for n in _DEF_RE.findall(structure) if not n.startswith("solve")]
        return json.dumps([{"name": n, "reason": "tunable heuristic logic"} for n in names])

    def _on_dependency_repair(self, prompt: str) -> str:
        match = _MISSING_RE.search(prompt)
        name = match.group(1) if match else "helper"
        if name in _REPAIR_TABLE:
            return _REPAIR_TABLE[name]
        return f"```python\ndef {name}(*args, **kwargs):\n    return 0\n```"


def build_demo_backend(problem: str, failure_rate: float = 0.0) -> MockBackend:
    return MockBackend(responder=DemoResponder(problem, failure_rate))
