"""Acceptance gate: every criterion at its stated tolerance.

Each test implements one criterion; the terminal summary prints one
PASS/FAIL line per criterion (see conftest).
"""

import csv
import json
import math
import os
import random
import re
import time
from pathlib import Path

import pytest

from adept import cops
from adept.baselines import GREEDY_CONSTRUCTIVE, baseline_guest_source
from adept.callgraph import RepairStatus, build_call_graph, prune_unreachable, repair_loop
from adept.evaluation import (
    InstanceRecord,
    InstanceStatus,
    SubprocessRunner,
    aggregate_scores,
    build_fitness_set,
    evaluate_program,
)
from adept.operators import schedule_probabilities
from adept.orchestrator import RunConfig, run
from adept.program_model import FunctionEntry, Role, parse_source
from adept.scores import is_failed, normalize_score
from adept.search_tree import OperatorWeights
from adept.selection import AnnealState, boltzmann_supplement, sa_accept, update_temperature

from conftest import scripted_gateway

DATA = Path(__file__).parent / "data"


def test_selection_math_vs_closed_form():
    """sa_accept MC within 0.3679 +/- 0.01; Boltzmann draw frequencies within
    +/- 0.01; softmax probabilities exact to 1e-12; all under 10 s."""
    started = time.monotonic()
    draws = 10**5

    rng = random.Random(20250801)
    accepted = sum(sa_accept(2.0, 3.0, 1.0, rng.random()) for _ in range(draws))
    assert abs(accepted / draws - 0.3679) < 0.01

    pool = [(1, 1.0), (2, 0.0)]
    p_closed = 1.0 / (1.0 + math.exp(-1.0))
    hits = sum(boltzmann_supplement(pool, 1, 1.0, rng) == [1] for _ in range(draws))
    assert abs(hits / draws - p_closed) < 0.01

    pool3 = [(1, 0.7), (2, 0.0), (3, -0.4)]
    weights = [math.exp(s - 0.7) for _, s in pool3]
    target = weights[0] / sum(weights)
    hits3 = sum(boltzmann_supplement(pool3, 1, 1.0, rng) == [1] for _ in range(draws))
    assert abs(hits3 / draws - target) < 0.01

    for micro, macro, tau in [(0.0, 0.0, 1.0), (1.0, 0.0, 1.0), (-2.5, 1.25, 0.4), (3.0, 3.0, 0.05)]:
        p_micro, p_macro = schedule_probabilities(OperatorWeights(micro, macro), tau)
        direct = math.exp(micro / tau) / (math.exp(micro / tau) + math.exp(macro / tau))
        assert abs(p_micro - direct) < 1e-12
        assert abs(p_micro + p_macro - 1.0) < 1e-12

    assert time.monotonic() - started < 10.0


def test_temperature_schedule_exact():
    """Scripted (improve, stall x3, improve) sequence under the published
    defaults: T0*alpha after the improvement, +Delta-T re-anneal at stall 3
    with counter reset; exact float equality throughout."""
    state = AnnealState(temperature=1.0, stall_counter=0, t0=1.0, alpha=0.95, delta_t=0.2, n_stall=3)

    state = update_temperature(state, improved_global_best=True)
    assert state.temperature == 1.0 * 0.95 == 0.95
    assert state.stall_counter == 0

    state = update_temperature(state, False)
    assert (state.temperature, state.stall_counter) == (0.95 * 0.95, 1)
    state = update_temperature(state, False)
    assert (state.temperature, state.stall_counter) == (0.95 * 0.95 * 0.95, 2)
    before = state.temperature
    state = update_temperature(state, False)
    assert state.temperature == before + 0.2
    assert state.stall_counter == 0

    state = update_temperature(state, True)
    assert state.temperature == (before + 0.2) * 0.95
    assert state.stall_counter == 0


def test_dependency_closure_corpus(profile, library):
    """All >= 20 shipped broken programs reach dependency closure within the
    scripted call count; pruning removes every unreachable function and is
    idempotent; under 5 s."""
    started = time.monotonic()
    manifest = json.loads((DATA / "broken_corpus" / "manifest.json").read_text())
    assert len(manifest) >= 20

    missing_re = re.compile(r"helper function\s+([A-Za-z_]\w*)")
    for name, spec in sorted(manifest.items()):
        source = (DATA / "broken_corpus" / f"{name}.py").read_text()
        program = parse_source(source, profile, entry_hint="solve")
        responses = spec["responses"]

        def respond(request, responses=responses):
            missing = missing_re.search(request.prompt).group(1)
            if missing in responses:
                return responses[missing]
            return f"```python\ndef {missing}(*args, **kwargs):\n    return 0\n```"

        gateway = scripted_gateway(respond, limit=50)
        outcome = repair_loop(program, gateway, 50, profile, library=library)
        assert outcome.status is RepairStatus.CLOSED, name
        assert outcome.calls_used == spec["expected_calls"], name
        assert build_call_graph(outcome.program, profile).unresolved == set(), name

        orphaned = outcome.program.add_function(
            FunctionEntry("never_called_helper", "def never_called_helper(x):",
                          "def never_called_helper(x):\n    return x", Role.IMMUTABLE)
        )
        pruned = prune_unreachable(orphaned, profile)
        assert "never_called_helper" not in pruned.registry, name
        graph = build_call_graph(pruned, profile)
        reachable = {pruned.entry}
        stack = [pruned.entry]
        adjacency = {}
        for u, v in graph.edges:
            adjacency.setdefault(u, set()).add(v)
        while stack:
            node = stack.pop()
            for nxt in adjacency.get(node, ()):
                if nxt in graph.defined and nxt not in reachable:
                    reachable.add(nxt)
                    stack.append(nxt)
        assert set(pruned.registry) == reachable, name
        assert prune_unreachable(pruned, profile) == pruned, name

    assert time.monotonic() - started < 5.0


def _independent_objective(instance, solution) -> float:
    """Formulation-level recomputation, separate from cops.objective."""
    payload = instance.payload
    problem = instance.problem
    if problem == "mis":
        return float(len(set(solution)))
    if problem == "cvrp":
        coords = payload["coordinates"]
        total = 0.0
        for route in solution:
            path = [0] + list(route) + [0]
            for a, b in zip(path, path[1:]):
                total += math.hypot(coords[a][0] - coords[b][0], coords[a][1] - coords[b][1])
        return total
    if problem == "cflp":
        opened = sorted(set(solution))
        z = sum(payload["fixed_costs"][i] for i in opened)
        for j, i in enumerate(solution):
            z += payload["assignment_costs"][i][j]
        return z
    if problem == "fjsp":
        makespan = 0.0
        for job_spec, job_plan in zip(payload["jobs"], solution):
            for (machine, start), op_spec in zip(job_plan, job_spec):
                proc = dict((k, p) for k, p in op_spec)[machine]
                makespan = max(makespan, start + proc)
        return makespan
    if problem == "cevrptw":
        matrix = payload["distance_matrix"]
        total = 0.0
        for route in solution:
            path = [0] + list(route) + [0]
            for a, b in zip(path, path[1:]):
                total += matrix[a][b]
        return total
    if problem == "mrcpsp":
        return float(solution[-1][1])
    raise AssertionError(problem)


def test_evaluator_oracle_equivalence():
    """Per problem, 50 tiny instances: the oracle witness validates Feasible
    and matches the recomputed objective; none of 1,000 random feasible
    solutions beats the optimum; under 5 min total."""
    started = time.monotonic()
    per_instance_draws = 20  # x 50 instances = 1,000 per problem
    for problem in cops.PROBLEMS:
        direction = cops.direction(problem)
        rng = random.Random(hash(problem) & 0xFFFF)
        for seed in range(50):
            instance = cops.generate_tiny(problem, seed)
            optimum, witness = cops.oracle_optimum(instance)
            verdict = cops.validate(instance, witness)
            assert verdict, (problem, seed, verdict.reason)
            assert cops.objective(instance, witness) == pytest.approx(optimum, abs=1e-9)
            assert _independent_objective(instance, witness) == pytest.approx(optimum, abs=1e-9)
            for _ in range(per_instance_draws):
                sol = cops.random_feasible(instance, rng)
                v = cops.validate(instance, sol)
                assert v, (problem, seed, v.reason)
                obj = cops.objective(instance, sol)
                assert _independent_objective(instance, sol) == pytest.approx(obj, abs=1e-9)
                if direction == "min":
                    assert obj >= optimum - 1e-9, (problem, seed)
                else:
                    assert obj <= optimum + 1e-9, (problem, seed)
    assert time.monotonic() - started < 300.0


def test_scoring_protocol():
    """normalize_score is exactly +/- objective/sigma; a hand-built
    16-instance set aggregates to the arithmetic mean within 1e-12; one
    Infeasible instance fails the aggregate."""
    assert normalize_score(250.0, "min", 25) == -10.0
    assert normalize_score(20.0, "max", 50) == 0.4
    assert normalize_score(0.0, "min", 13) == 0.0
    assert normalize_score(7.0, "max", 2) == 3.5

    objectives = [float(3 * i + 1) for i in range(16)]
    sigmas = [25, 25, 25, 25, 50, 50, 50, 50, 100, 100, 100, 100, 200, 200, 200, 200]
    records = [
        InstanceRecord(i, "small", InstanceStatus.OK, obj, normalize_score(obj, "min", sig))
        for i, (obj, sig) in enumerate(zip(objectives, sigmas))
    ]
    expected = sum(-obj / sig for obj, sig in zip(objectives, sigmas)) / 16
    assert abs(aggregate_scores(records) - expected) < 1e-12

    broken = records[:7] + [InstanceRecord(7, "small", InstanceStatus.INFEASIBLE)] + records[8:]
    assert is_failed(aggregate_scores(broken))


def _cumulative_best_column(path: Path) -> list[float]:
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return [float(r["cumulative_best"]) for r in rows if r["cumulative_best"]]


def test_end_to_end_determinism(tmp_path):
    """Mock MIS run (budget 60, K=5, fixed seeds) in < 2 min with
    non-decreasing best and exact budget accounting; resuming from the
    generation-2 checkpoint reproduces a bit-identical tree and report."""
    common = dict(problem="mis", budget=60, parents=5, seed=7, fitness_seed=3)
    started = time.monotonic()
    full = run(RunConfig(**common, checkpoint_dir=str(tmp_path / "ck_full"),
                         checkpoint_interval=2, out_dir=str(tmp_path / "out_full")))
    elapsed = time.monotonic() - started
    assert elapsed < 120.0, f"run took {elapsed:.1f}s"

    assert full.ledger.used <= 60
    assert sum(full.ledger.by_phase.values()) == full.ledger.used
    cumulative = _cumulative_best_column(tmp_path / "out_full" / "generations.csv")
    assert cumulative == sorted(cumulative)

    resumed = run(
        RunConfig(**common, checkpoint_dir=str(tmp_path / "ck_res"),
                  checkpoint_interval=2, out_dir=str(tmp_path / "out_res")),
        resume_path=tmp_path / "ck_full" / "checkpoint_gen0002.json",
    )
    assert json.dumps(full.tree.to_doc(), sort_keys=True) == json.dumps(resumed.tree.to_doc(), sort_keys=True)
    assert full.ledger.snapshot() == resumed.ledger.snapshot()
    for name in ("best_program.py", "nodes.csv", "generations.csv", "operators.csv", "budget.csv", "summary.json"):
        a = (tmp_path / "out_full" / name).read_bytes()
        b = (tmp_path / "out_res" / name).read_bytes()
        assert a == b, f"{name} differs after resume"


@pytest.mark.parametrize("problem", cops.PROBLEMS)
def test_baseline_feasibility(problem, profile):
    """The greedy constructive guest program is Feasible on all 16 fitness
    instances within the 120 s total limit."""
    source = baseline_guest_source(problem, GREEDY_CONSTRUCTIVE)
    program = parse_source(source, profile, entry_hint=cops.entry_name(problem))
    fitness = build_fitness_set(problem, seed=0, total_time_limit_s=120.0)
    result = evaluate_program(program, fitness, SubprocessRunner(), workers=4)
    bad = [(r.tier, r.status.value, r.detail) for r in result.records if r.status is not InstanceStatus.OK]
    assert not bad, bad
    assert not result.failed
    assert result.total_wall_time_s <= 120.0


def test_failed_node_quarantine(monkeypatch):
    """With ~50% of candidates scripted to fail, no Failed node ever appears
    in any selection output, instrumented over the whole run."""
    import adept.orchestrator as orch

    selected_log: list[int] = []
    real_select = orch.select_parents
    real_partner = orch.sample_crossover_partner

    def spy_select(tree, state, k, rng):
        picked = real_select(tree, state, k, rng)
        selected_log.extend(picked)
        return picked

    def spy_partner(tree, primary, rng):
        partner = real_partner(tree, primary, rng)
        selected_log.append(partner)
        return partner

    monkeypatch.setattr(orch, "select_parents", spy_select)
    monkeypatch.setattr(orch, "sample_crossover_partner", spy_partner)

    config = RunConfig(problem="mis", budget=40, parents=4, seed=21, fitness_seed=3,
                       mock_failure_rate=0.5)
    result = run(config)

    failed_ids = {n.id for n in result.tree.nodes() if not n.evaluated}
    assert failed_ids, "failure injection produced no failed nodes; test is vacuous"
    assert selected_log, "no selections recorded"
    assert not (set(selected_log) & failed_ids)
    for node in result.tree.nodes():
        _, parents = node.history[-1]
        for pid in parents:
            assert result.tree.node(pid).evaluated


@pytest.mark.skipif(
    not os.environ.get("ADEPT_LLM_BASE_URL"),
    reason="optional/manual: requires a configured OpenAI-compatible endpoint",
)
def test_remote_smoke_run():
    """50-call smoke run on MIS against a real endpoint: no infrastructure
    errors and at least one evaluated non-root node."""
    config = RunConfig(problem="mis", budget=50, parents=3, seed=0, fitness_seed=0, backend="remote")
    result = run(config)
    non_roots = [n for n in result.tree.nodes() if n.parent_id is not None and n.evaluated]
    assert non_roots
