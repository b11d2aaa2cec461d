"""Variation operators and their adaptive scheduling.

Three operators act on parent programs: interface-preserving micro-tuning of
one mutable function, macro-mutation that reconstructs the entry function,
and crossover that synthesizes a hybrid entry from two parents.  A softmax
scheduler over per-node weights picks between the two mutation granularities;
crossover is triggered separately.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass

from .callgraph import RepairStatus, parse_fragment, prune_unreachable, repair_loop
from .errors import NoCodeFound, NoPartner, UnparsableRoleList
from .gateway import Gateway
from .guest_profile import GuestProfile
from .program_model import (
    FunctionEntry,
    Role,
    StructuredProgram,
    apply_role_partition,
    structure_summary,
)
from .prompt_library import TemplateId, TemplateLibrary, extract_code, extract_thought, parse_role_list
from .scores import is_failed
from .search_tree import OperatorWeights, ProgramNode, SearchTree

log = logging.getLogger(__name__)

MICRO_TUNE = "micro_tune"
MACRO_MUTATE = "macro_mutate"
CROSSOVER = "crossover"
SEED = "seed"

MUTATION_KINDS = (MICRO_TUNE, MACRO_MUTATE)


@dataclass(frozen=True)
class SchedulerConfig:
    lambda_penalty: float = 0.8
    p_cross: float = 0.2
    r_max: float = 1.0
    epsilon_denom: float = 1e-9

    def __post_init__(self):
        if self.lambda_penalty <= 0:
            raise ValueError("lambda_penalty must be > 0")
        if not 0 <= self.p_cross <= 1:
            raise ValueError("p_cross must lie in [0, 1]")


def schedule_probabilities(weights: OperatorWeights, tau: float) -> tuple[float, float]:
    """Softmax over the two mutation weights, max-shifted for overflow safety."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    shift = max(weights.micro, weights.macro)
    e_micro = math.exp((weights.micro - shift) / tau)
    e_macro = math.exp((weights.macro - shift) / tau)
    total = e_micro + e_macro
    return e_micro / total, e_macro / total


def schedule_operator(weights: OperatorWeights, tau: float, u: float) -> str:
    p_micro, _ = schedule_probabilities(weights, tau)
    return MICRO_TUNE if u < p_micro else MACRO_MUTATE


def update_weights(
    weights: OperatorWeights,
    op: str,
    s_child: float,
    s_parent: float,
    config: SchedulerConfig,
) -> OperatorWeights:
    """Reinforce or penalize one coordinate by the clamped normalized change."""
    if op not in MUTATION_KINDS:
        raise ValueError(f"weight update applies to mutation operators only, got {op!r}")
    if is_failed(s_parent):
        raise ValueError("parent score must be finite")
    if is_failed(s_child):
        r_bar = -config.r_max
    else:
        denom = max(abs(s_parent), config.epsilon_denom)
        r_bar = (s_child - s_parent) / denom
        r_bar = max(-config.r_max, min(config.r_max, r_bar))
    delta = r_bar if r_bar >= 0 else -config.lambda_penalty * abs(r_bar)
    new = weights.copy()
    if op == MICRO_TUNE:
        new.micro += delta
    else:
        new.macro += delta
    return new


def crossover_partner_weights(tree: SearchTree, primary: int) -> dict[int, float]:
    """Unnormalized Eq-style weights over candidate partners: performance of
    the better node of the pair times a lineage-diversity factor in [0, 1]."""
    primary_node = tree.node(primary)
    candidates = [n for n in tree.evaluated_nodes() if n.id != primary]
    if not candidates:
        raise NoPartner("no other evaluated node in the tree")
    stats = tree.stats()
    s_max, s_min, d_max = stats.s_max, stats.s_min, stats.d_max
    degenerate = s_max == s_min or d_max == 0
    weights: dict[int, float] = {}
    for cand in candidates:
        if degenerate:
            weights[cand.id] = 1.0
            continue
        s_better = max(primary_node.score, cand.score)
        perf = (s_better - s_min) / (s_max - s_min)
        diversity = 1.0 - tree.lca_depth(primary, cand.id) / d_max
        diversity = max(0.0, min(1.0, diversity))
        weights[cand.id] = perf * diversity
    if all(w == 0.0 for w in weights.values()):
        weights = {i: 1.0 for i in weights}
    return weights


def sample_crossover_partner(tree: SearchTree, primary: int, rng: random.Random) -> int:
    weights = crossover_partner_weights(tree, primary)
    ids = sorted(weights)
    total = sum(weights[i] for i in ids)
    draw = rng.random() * total
    acc = 0.0
    for i in ids:
        acc += weights[i]
        if draw < acc:
            return i
    return ids[-1]


@dataclass
class OperatorServices:
    profile: GuestProfile
    library: TemplateLibrary
    gateway: Gateway
    task_description: str
    mutation_temperature: float = 0.8
    repair_temperature: float = 0.2
    max_context_chars: int = 4000
    max_generation_attempts: int = 2


@dataclass
class OperatorResult:
    kind: str
    program: StructuredProgram | None
    thought: str
    calls_used: int
    repair_status: RepairStatus | None = None
    failure_reason: str = ""

    @property
    def failed(self) -> bool:
        return self.program is None


def _normalized_signature(signature: str) -> str:
    return "".join(signature.split())


def _install_entry(program: StructuredProgram, main: FunctionEntry) -> StructuredProgram:
    """Replace the entry function with ``main`` (which may carry a new name),
    keeping its registry position."""
    new_entry = FunctionEntry(main.name, main.signature, main.body, Role.ENTRY)
    entries: list[FunctionEntry] = []
    for e in program.entries:
        if e.name == program.entry:
            entries.append(new_entry)
        elif e.name == main.name:
            continue  # renamed entry collides with an existing helper
        else:
            entries.append(e)
    return StructuredProgram(program.preface, tuple(entries), main.name)


def _merge_imports(program: StructuredProgram, imports: list[str]) -> StructuredProgram:
    have = set(program.preface.split("\n"))
    fresh = [line for line in imports if line not in have]
    if not fresh:
        return program
    preface = "\n".join(filter(None, [program.preface, "\n".join(fresh)]))
    return program.with_preface(preface)


def apply_operator(
    kind: str,
    parents: list[ProgramNode],
    services: OperatorServices,
    budget: int,
    rng: random.Random,
) -> OperatorResult:
    """Produce one candidate program (or a failure record) from the parents.

    Micro-tuning touches exactly one mutable function and nothing else.
    Macro-mutation and crossover rebuild the entry point, then re-partition
    roles, repair missing dependencies and prune unreachable functions.  All
    generator invocations count against the shared budget.
    """
    if kind == MICRO_TUNE:
        if not parents[0].program.functions_with_role(Role.MUTABLE):
            log.info("no mutable function on parent %s, falling back to macro-mutation", parents[0].id)
            kind = MACRO_MUTATE
        else:
            return _micro_tune(parents[0], services, rng)
    if kind == MACRO_MUTATE:
        return _entry_rewrite(
            kind, parents[0].program, _macro_prompt(parents[0], services), services, budget
        )
    if kind == CROSSOVER:
        if len(parents) != 2:
            raise ValueError("crossover requires two parents")
        base = _union_program(parents[0].program, parents[1].program)
        return _entry_rewrite(
            kind, base, _crossover_prompt(parents[0], parents[1], services), services, budget
        )
    raise ValueError(f"unknown operator kind {kind!r}")


def _micro_tune(parent: ProgramNode, services: OperatorServices, rng: random.Random) -> OperatorResult:
    mutable = parent.program.functions_with_role(Role.MUTABLE)
    target = mutable[rng.randrange(len(mutable))]
    prompt = services.library.render(
        TemplateId.MICRO_TUNE,
        {"task_description": services.task_description, "FUNC_CODE": target.body},
    )
    calls = 0
    reason = ""
    for _ in range(services.max_generation_attempts):
        text = services.gateway.complete(
            prompt,
            tag=TemplateId.MICRO_TUNE.value,
            phase="mutation",
            temperature=services.mutation_temperature,
        )
        calls += 1
        try:
            _, entries = parse_fragment(extract_code(text, services.profile), services.profile)
        except NoCodeFound:
            reason = "response holds no code"
            continue
        candidates = [e for e in entries if e.name == target.name] or entries
        if not candidates:
            reason = "response holds no function definition"
            continue
        new_fn = candidates[0]
        if new_fn.name != target.name or _normalized_signature(new_fn.signature) != _normalized_signature(target.signature):
            reason = f"interface not preserved for {target.name!r}"
            continue
        replacement = FunctionEntry(target.name, new_fn.signature, new_fn.body, target.role)
        program = parent.program.replace_function(target.name, replacement)
        return OperatorResult(MICRO_TUNE, program, parent.thought, calls, RepairStatus.CLOSED)
    return OperatorResult(MICRO_TUNE, None, parent.thought, calls, None, reason)


def _macro_prompt(parent: ProgramNode, services: OperatorServices) -> str:
    return services.library.render(
        TemplateId.MACRO_MUTATE,
        {
            "task_description": services.task_description,
            "PREVIOUS_THOUGHT": parent.thought or "(none recorded)",
            "CURRENT_CODE": parent.program.entry_function.body,
        },
    )


def _crossover_prompt(a: ProgramNode, b: ProgramNode, services: OperatorServices) -> str:
    return services.library.render(
        TemplateId.CROSSOVER,
        {
            "task_description": services.task_description,
            "THOUGHT_A": a.thought or "(none recorded)",
            "CODE_A_MAIN": a.program.entry_function.body,
            "THOUGHT_B": b.thought or "(none recorded)",
            "CODE_B_MAIN": b.program.entry_function.body,
        },
    )


def _union_program(primary: StructuredProgram, partner: StructuredProgram) -> StructuredProgram:
    """Primary program plus the partner's non-colliding helpers and imports."""
    merged = _merge_imports(primary, [l for l in partner.preface.split("\n") if l])
    for entry in partner.entries:
        if entry.name in merged.registry:
            continue
        merged = merged.add_function(
            FunctionEntry(entry.name, entry.signature, entry.body, Role.IMMUTABLE)
        )
    return merged


def _entry_rewrite(
    kind: str,
    base: StructuredProgram,
    prompt: str,
    services: OperatorServices,
    budget: int,
) -> OperatorResult:
    """Shared macro-mutation/crossover flow: new entry, role analysis,
    dependency repair, pruning."""
    tag = TemplateId.MACRO_MUTATE if kind == MACRO_MUTATE else TemplateId.CROSSOVER
    phase = "mutation" if kind == MACRO_MUTATE else "crossover"
    calls = 0
    reason = ""
    for _ in range(services.max_generation_attempts):
        text = services.gateway.complete(
            prompt, tag=tag.value, phase=phase, temperature=services.mutation_temperature
        )
        calls += 1
        thought = extract_thought(text)
        try:
            imports, entries = parse_fragment(extract_code(text, services.profile), services.profile)
        except NoCodeFound:
            reason = "response holds no code"
            continue
        if not entries:
            reason = "response holds no function definition"
            continue
        program = _merge_imports(base, imports)
        program = _install_entry(program, entries[0])
        for extra in entries[1:]:
            if extra.name not in program.registry:
                program = program.add_function(extra)

        program, role_calls = _reanalyze_roles(program, services)
        calls += role_calls

        outcome = repair_loop(
            program,
            services.gateway,
            max(0, budget - calls),
            services.profile,
            library=services.library,
            task_description=services.task_description,
            max_context_chars=services.max_context_chars,
            temperature=services.repair_temperature,
        )
        calls += outcome.calls_used
        program = prune_unreachable(outcome.program, services.profile)
        return OperatorResult(kind, program, thought, calls, outcome.status)
    return OperatorResult(kind, None, "", calls, None, reason)


def _reanalyze_roles(
    program: StructuredProgram, services: OperatorServices
) -> tuple[StructuredProgram, int]:
    """One role-analysis call; falls back to all-mutable on unparsable output."""
    prompt = services.library.render(
        TemplateId.ROLE_ANALYSIS,
        {
            "task_description": services.task_description,
            "code_structure": structure_summary(program),
        },
    )
    text = services.gateway.complete(
        prompt,
        tag=TemplateId.ROLE_ANALYSIS.value,
        phase="role_analysis",
        temperature=services.repair_temperature,
    )
    try:
        mutable = parse_role_list(text)
    except UnparsableRoleList:
        log.warning("unparsable role list, marking all non-entry functions mutable")
        mutable = {name for name in program.registry if name != program.entry}
    return apply_role_partition(program, mutable), 1
