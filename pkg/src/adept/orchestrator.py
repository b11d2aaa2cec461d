"""End-to-end search driver: cold start, batched expansion with hybrid
selection and adaptive operators, budget accounting, checkpointing, reports."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import random
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import cops
from .callgraph import RepairStatus, prune_unreachable, repair_loop
from .demo import build_demo_backend
from .errors import BudgetExhausted, ConfigError, EmptyTree, EntryUnresolved, NoCodeFound, NoFunctionsFound
from .evaluation import (
    FitnessSet,
    SubprocessRunner,
    build_fitness_set,
    contract_smoke_check,
    default_runner_command,
    evaluate_program,
)
from .gateway import BudgetLedger, Gateway, MockBackend, RemoteBackend
from .guest_profile import GuestProfile, default_profile
from .operators import (
    CROSSOVER,
    MUTATION_KINDS,
    OperatorResult,
    OperatorServices,
    SchedulerConfig,
    apply_operator,
    sample_crossover_partner,
    schedule_operator,
    update_weights,
)
from .program_model import parse_source
from .prompt_library import TemplateId, TemplateLibrary, extract_code, extract_thought
from .scores import FAILED_SCORE, is_failed
from .search_tree import (
    NodeStatus,
    OperatorWeights,
    ProgramNode,
    SearchTree,
    checkpoint as write_checkpoint,
    restore as read_checkpoint,
)
from .selection import AnnealState, select_parents, update_temperature

log = logging.getLogger(__name__)

SEED_OP = "seed"


@dataclass
class RunConfig:
    problem: str
    parents: int = 5
    budget: int = 500
    seed: int = 0
    fitness_seed: int = 0
    t0: float = 1.0
    alpha: float = 0.95
    n_stall: int = 3
    delta_t: float = 0.2
    lambda_penalty: float = 0.8
    p_cross: float = 0.2
    r_max: float = 1.0
    epsilon_denom: float = 1e-9
    eval_total_time_s: float = 120.0
    eval_workers: int = 4
    smoke_limit_s: float = 2.0
    backend: str = "mock"
    mock_failure_rate: float = 0.0
    mock_scenario_path: str | None = None
    mock_fixtures_dir: str | None = None
    remote_base_url: str | None = None
    remote_model: str | None = None
    checkpoint_dir: str | None = None
    checkpoint_interval: int = 5
    out_dir: str | None = None
    runner_command: list[str] | None = None
    max_generation_attempts: int = 2
    mutation_temperature: float = 0.8
    repair_temperature: float = 0.2
    max_context_chars: int = 4000

    def __post_init__(self):
        if self.problem not in cops.PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; known: {cops.PROBLEMS}")
        if self.parents < 1 or self.budget < 0:
            raise ConfigError("parents must be >= 1 and budget >= 0")
        if self.backend not in ("mock", "remote"):
            raise ConfigError(f"backend must be mock or remote, got {self.backend!r}")

    def config_hash(self) -> str:
        doc = asdict(self)
        for volatile in ("checkpoint_dir", "checkpoint_interval", "out_dir"):
            doc.pop(volatile)
        blob = json.dumps(doc, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "RunConfig":
        doc = json.loads(Path(path).read_text())
        doc.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(f"bad config file {path}: {exc}") from exc


@dataclass
class Services:
    profile: GuestProfile
    library: TemplateLibrary
    gateway: Gateway
    runner: SubprocessRunner
    fitness: FitnessSet
    task_description: str
    operator_services: OperatorServices = field(init=False)

    def __post_init__(self):
        self.operator_services = OperatorServices(
            profile=self.profile,
            library=self.library,
            gateway=self.gateway,
            task_description=self.task_description,
        )


def derive_rng(seed: int, *tags) -> random.Random:
    key = "|".join([str(seed), *map(str, tags)])
    digest = hashlib.sha256(key.encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def build_services(config: RunConfig, ledger: BudgetLedger | None = None) -> Services:
    if ledger is None:
        ledger = BudgetLedger(limit=config.budget)
    if config.backend == "mock":
        if config.mock_scenario_path:
            backend = MockBackend(
                scenario=MockBackend.load_scenario(config.mock_scenario_path),
                start_index=ledger.used,
            )
        elif config.mock_fixtures_dir:
            backend = MockBackend(fixtures_dir=config.mock_fixtures_dir)
        else:
            backend = build_demo_backend(config.problem, config.mock_failure_rate)
    else:
        backend = RemoteBackend(base_url=config.remote_base_url, model=config.remote_model)
    gateway = Gateway(backend=backend, ledger=ledger)
    runner = SubprocessRunner(command=config.runner_command or default_runner_command())
    fitness = build_fitness_set(config.problem, config.fitness_seed, config.eval_total_time_s)
    services = Services(
        profile=default_profile(),
        library=TemplateLibrary(),
        gateway=gateway,
        runner=runner,
        fitness=fitness,
        task_description=cops.task_description(config.problem),
    )
    services.operator_services.mutation_temperature = config.mutation_temperature
    services.operator_services.repair_temperature = config.repair_temperature
    services.operator_services.max_context_chars = config.max_context_chars
    services.operator_services.max_generation_attempts = config.max_generation_attempts
    return services


def _history_summaries(strategies: list[str]) -> str:
    if not strategies:
        return "(none yet)"
    lines = []
    for i, text in enumerate(strategies, 1):
        first = next((l.strip() for l in text.split("\n") if l.strip()), "")
        lines.append(f"{i}. {first[:200]}")
    return "\n".join(lines)


def _evaluate_candidate(
    program, repair_status: RepairStatus | None, config: RunConfig, services: Services
) -> tuple[float, NodeStatus]:
    if repair_status is RepairStatus.INCOMPLETE_BUDGET_EXHAUSTED:
        return FAILED_SCORE, NodeStatus.INCOMPLETE
    if not contract_smoke_check(program, services.fitness.smallest, services.runner, config.smoke_limit_s):
        return FAILED_SCORE, NodeStatus.FAILED
    result = evaluate_program(program, services.fitness, services.runner, config.eval_workers)
    if result.failed:
        return FAILED_SCORE, NodeStatus.FAILED
    return result.aggregate, NodeStatus.EVALUATED


def cold_start(config: RunConfig, services: Services, tree: SearchTree) -> None:
    """Three-stage seeding: one analysis call, K strategy calls conditioned
    on prior summaries, K implementation calls; each implementation repaired,
    pruned and evaluated before insertion as a root."""
    library, gateway = services.library, services.gateway
    task = services.task_description
    try:
        analysis = gateway.complete(
            library.render(TemplateId.ANALYSIS, {"task_description": task}),
            tag=TemplateId.ANALYSIS.value, phase="cold_start",
            temperature=config.mutation_temperature,
        )
        strategies: list[str] = []
        for _ in range(config.parents):
            prompt = library.render(
                TemplateId.STRATEGY,
                {"ANALYSIS_RESULT": analysis, "HISTORY_SUMMARIES": _history_summaries(strategies)},
            )
            strategies.append(
                gateway.complete(prompt, tag=TemplateId.STRATEGY.value, phase="cold_start",
                                 temperature=config.mutation_temperature)
            )
        template = cops.function_template(config.problem)
        for plan in strategies:
            prompt = library.render(
                TemplateId.SEED_IMPLEMENTATION,
                {"task_description": task, "STRATEGY_PLAN": plan, "FUNCTION_TEMPLATE": template},
            )
            text = gateway.complete(prompt, tag=TemplateId.SEED_IMPLEMENTATION.value,
                                    phase="cold_start", temperature=config.mutation_temperature)
            _insert_seed(text, config, services, tree)
    except BudgetExhausted:
        log.warning("budget exhausted during cold start; continuing with partial roots")
    tree.commit_batch()


def _insert_seed(text: str, config: RunConfig, services: Services, tree: SearchTree) -> None:
    try:
        code = extract_code(text, services.profile)
        program = parse_source(code, services.profile, entry_hint=cops.entry_name(config.problem))
    except (NoCodeFound, NoFunctionsFound, EntryUnresolved) as exc:
        log.warning("discarding unparsable seed implementation: %s", exc)
        return
    thought = extract_thought(text)
    outcome = repair_loop(
        program,
        services.gateway,
        services.gateway.remaining(),
        services.profile,
        library=services.library,
        task_description=services.task_description,
        max_context_chars=config.max_context_chars,
        temperature=config.repair_temperature,
    )
    program = prune_unreachable(outcome.program, services.profile)
    score, status = _evaluate_candidate(program, outcome.status, config, services)
    tree.insert(
        ProgramNode(
            program=program,
            score=score,
            thought=thought,
            status=status,
            parent_id=None,
            history=((SEED_OP, ()),),
            weights=OperatorWeights(),
        )
    )


def _choose_operator(
    tree: SearchTree,
    parent: ProgramNode,
    anneal: AnnealState,
    scheduler: SchedulerConfig,
    rng: random.Random,
) -> tuple[str, list[ProgramNode]]:
    if len(tree.evaluated_nodes()) >= 2 and rng.random() < scheduler.p_cross:
        partner = sample_crossover_partner(tree, parent.id, rng)
        return CROSSOVER, [parent, tree.node(partner)]
    kind = schedule_operator(parent.weights, tau=anneal.temperature, u=rng.random())
    return kind, [parent]


@dataclass
class RunResult:
    best: ProgramNode | None
    tree: SearchTree
    anneal: AnnealState
    ledger: BudgetLedger
    report_files: list[str] = field(default_factory=list)


def run(config: RunConfig, resume_path: str | Path | None = None) -> RunResult:
    scheduler = SchedulerConfig(
        lambda_penalty=config.lambda_penalty,
        p_cross=config.p_cross,
        r_max=config.r_max,
        epsilon_denom=config.epsilon_denom,
    )
    if resume_path is not None:
        tree, extra = read_checkpoint(resume_path)
        if extra.get("config_hash") != config.config_hash():
            raise ConfigError("checkpoint was produced under a different config or seed")
        ledger = BudgetLedger.restore(extra["ledger"])
        anneal = AnnealState(**extra["anneal"])
        services = build_services(config, ledger)
    else:
        services = build_services(config)
        ledger = services.gateway.ledger
        anneal = AnnealState(
            temperature=config.t0, stall_counter=0, t0=config.t0,
            alpha=config.alpha, delta_t=config.delta_t, n_stall=config.n_stall,
        )
        cold_start(config, services, tree := SearchTree())

    while services.gateway.remaining() > 0:
        generation = tree.generation
        rng_select = derive_rng(config.seed, "select", generation)
        parent_ids = select_parents(tree, anneal, config.parents, rng_select)
        if not parent_ids:
            log.warning("no selectable parents; stopping early")
            break
        progressed = False
        for index, parent_id in enumerate(parent_ids):
            if services.gateway.remaining() <= 0:
                break
            rng_op = derive_rng(config.seed, "operator", generation, index)
            parent = tree.node(parent_id)
            kind, op_parents = _choose_operator(tree, parent, anneal, scheduler, rng_op)
            try:
                result = apply_operator(
                    kind, op_parents, services.operator_services,
                    services.gateway.remaining(), rng_op,
                )
            except BudgetExhausted:
                log.info("budget exhausted mid-expansion; discarding the in-flight candidate")
                break
            node = _commit_candidate(result, parent, op_parents, config, services, tree, scheduler)
            best = tree.stats().best_id
            improved = node.evaluated and (best is None or node.id == best)
            anneal = update_temperature(anneal, improved)
            progressed = True
        tree.commit_batch()
        if config.checkpoint_dir and tree.generation % config.checkpoint_interval == 0:
            _save_checkpoint(config, tree, anneal, ledger)
        if not progressed:
            break

    if config.checkpoint_dir:
        _save_checkpoint(config, tree, anneal, ledger, final=True)
    stats = tree.stats()
    best = tree.node(stats.best_id) if stats.best_id is not None else None
    files: list[str] = []
    if config.out_dir:
        files = [str(p) for p in report(tree, config.out_dir, ledger)]
    return RunResult(best=best, tree=tree, anneal=anneal, ledger=ledger, report_files=files)


def _commit_candidate(
    result: OperatorResult,
    parent: ProgramNode,
    op_parents: list[ProgramNode],
    config: RunConfig,
    services: Services,
    tree: SearchTree,
    scheduler: SchedulerConfig,
) -> ProgramNode:
    if result.failed:
        score, status = FAILED_SCORE, NodeStatus.FAILED
        program = parent.program  # program of record when generation was unusable
    else:
        program = result.program
        score, status = _evaluate_candidate(program, result.repair_status, config, services)

    if result.kind in MUTATION_KINDS:
        new_weights = update_weights(parent.weights, result.kind, score, parent.score, scheduler)
        tree.update_weights(parent.id, new_weights)
        child_weights = new_weights.copy()
    else:
        child_weights = parent.weights.copy()

    node = ProgramNode(
        program=program,
        score=score,
        thought=result.thought or parent.thought,
        status=status,
        parent_id=parent.id,
        history=parent.history + ((result.kind, tuple(p.id for p in op_parents)),),
        weights=child_weights,
    )
    tree.insert(node)
    return node


def _save_checkpoint(config: RunConfig, tree: SearchTree, anneal: AnnealState, ledger: BudgetLedger, final: bool = False) -> Path:
    directory = Path(config.checkpoint_dir)
    directory.mkdir(parents=True, exist_ok=True)
    extra = {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "generation": tree.generation,
        "anneal": asdict(anneal),
        "ledger": ledger.snapshot(),
    }
    name = "checkpoint.json" if final else f"checkpoint_gen{tree.generation:04d}.json"
    path = directory / name
    write_checkpoint(tree, path, extra)
    return path


# --- reporting ---------------------------------------------------------------


def report(tree: SearchTree, out_dir: str | Path, ledger: BudgetLedger | None = None) -> list[Path]:
    """Best program source plus per-generation, operator and budget tables.

    Deterministic byte-for-byte given the same tree; wall-clock metadata goes
    to run_meta.json only.
    """
    if len(tree) == 0:
        raise EmptyTree("nothing to report: the tree is empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []

    stats = tree.stats()
    from .program_model import render_source
    from .search_tree import export_node_table

    best_path = out / "best_program.py"
    if stats.best_id is not None:
        best_path.write_text(render_source(tree.node(stats.best_id).program))
        files.append(best_path)

    nodes_path = out / "nodes.csv"
    export_node_table(tree, nodes_path)
    files.append(nodes_path)

    generations_path = out / "generations.csv"
    with open(generations_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generation", "nodes", "evaluated", "best", "mean", "cumulative_best"])
        cumulative = None
        by_gen: dict[int, list[ProgramNode]] = {}
        for node in tree.nodes():
            by_gen.setdefault(node.generation, []).append(node)
        for gen in sorted(by_gen):
            nodes = by_gen[gen]
            scores = [n.score for n in nodes if not is_failed(n.score)]
            best = max(scores) if scores else None
            mean = sum(scores) / len(scores) if scores else None
            if best is not None:
                cumulative = best if cumulative is None else max(cumulative, best)
            writer.writerow([
                gen, len(nodes), len(scores),
                "" if best is None else repr(best),
                "" if mean is None else repr(mean),
                "" if cumulative is None else repr(cumulative),
            ])
    files.append(generations_path)

    operators_path = out / "operators.csv"
    with open(operators_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["operator", "children", "evaluated", "improved_parent", "failed"])
        usage: dict[str, dict[str, int]] = {}
        for node in tree.nodes():
            if not node.history:
                continue
            op = node.history[-1][0]
            row = usage.setdefault(op, {"children": 0, "evaluated": 0, "improved": 0, "failed": 0})
            row["children"] += 1
            if node.evaluated:
                row["evaluated"] += 1
                if node.parent_id is not None:
                    parent = tree.node(node.parent_id)
                    if not is_failed(parent.score) and node.score > parent.score:
                        row["improved"] += 1
            else:
                row["failed"] += 1
        for op in sorted(usage):
            row = usage[op]
            writer.writerow([op, row["children"], row["evaluated"], row["improved"], row["failed"]])
    files.append(operators_path)

    if ledger is not None:
        budget_path = out / "budget.csv"
        with open(budget_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["phase", "calls"])
            for phase, calls in sorted(ledger.by_phase.items()):
                writer.writerow([phase, calls])
            writer.writerow(["total", ledger.used])
        files.append(budget_path)

    summary_path = out / "summary.json"
    summary = {
        "node_count": stats.node_count,
        "evaluated_count": stats.evaluated_count,
        "best_id": stats.best_id,
        "best_score": None if stats.s_max is None else stats.s_max,
        "max_depth": stats.d_max,
        "calls_used": None if ledger is None else ledger.used,
    }
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True))
    files.append(summary_path)

    meta_path = out / "run_meta.json"
    meta_path.write_text(json.dumps({"written_at_unix": time.time()}))
    files.append(meta_path)
    return files
