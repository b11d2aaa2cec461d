"""Flexible Job Shop Scheduling: eligibility-flexible instances, schedule
validation, exact assignment/interleaving oracle for tiny op counts."""

from __future__ import annotations

import itertools
import math
import random

from ..errors import TooLarge
from .base import FEASIBLE, CopInstance, Verdict, infeasible, require, rng_for

PROBLEM = "fjsp"
DIRECTION = "min"
ENTRY_NAME = "solve_fjsp"
ORACLE_MAX_OPERATIONS = 6

TIER_SIZE = {"small": (10, 5), "medium": (20, 10), "large": (50, 20), "extra_large": (100, 50)}

# solution: per job, per operation, [machine, start_time]
Schedule = list[list[list[float]]]


def _draw_op(rng: random.Random, machines: int, time_range=(10, 100)) -> list[list[int]]:
    while True:
        eligible = [k for k in range(machines) if rng.random() < 0.5]
        if eligible:
            return [[k, rng.randint(*time_range)] for k in eligible]


def _build(jobs: int, machines: int, ops_range, tier: str, seed: int, rng: random.Random) -> CopInstance:
    job_specs = []
    for _ in range(jobs):
        n_ops = rng.randint(*ops_range)
        job_specs.append([_draw_op(rng, machines) for _ in range(n_ops)])
    payload = {"num_jobs": jobs, "num_machines": machines, "jobs": job_specs}
    return CopInstance(PROBLEM, tier, seed, sigma=jobs, payload=payload)


def generate(tier: str, seed: int) -> CopInstance:
    jobs, machines = TIER_SIZE[tier]
    return _build(jobs, machines, (5, 15), tier, seed, rng_for(PROBLEM, tier, seed))


def generate_tiny(seed: int) -> CopInstance:
    rng = rng_for(PROBLEM, "tiny", seed)
    jobs = 2
    return _build(jobs, rng.randint(2, 3), (1, 3), "tiny", seed, rng)


def _proc_time(op_spec: list[list[int]], machine: int) -> int | None:
    for k, p in op_spec:
        if k == machine:
            return p
    return None


def decode(instance: CopInstance, raw) -> Schedule:
    jobs = instance.payload["jobs"]
    require(isinstance(raw, list) and len(raw) == len(jobs), "one op list per job expected")
    schedule: Schedule = []
    for job_spec, job_plan in zip(jobs, raw):
        require(isinstance(job_plan, list) and len(job_plan) == len(job_spec), "one [machine, start] per operation expected")
        ops = []
        for item in job_plan:
            require(isinstance(item, (list, tuple)) and len(item) == 2, "operation entry must be [machine, start]")
            machine, start = item
            require(isinstance(machine, int) and not isinstance(machine, bool), "machine must be an integer")
            require(isinstance(start, (int, float)) and not isinstance(start, bool), "start must be numeric")
            require(0 <= machine < instance.payload["num_machines"], "machine index out of range")
            ops.append([machine, float(start)])
        schedule.append(ops)
    return schedule


def validate(instance: CopInstance, schedule: Schedule) -> Verdict:
    jobs = instance.payload["jobs"]
    eps = 1e-9
    per_machine: dict[int, list[tuple[float, float, str]]] = {}
    for j, (job_spec, job_plan) in enumerate(zip(jobs, schedule)):
        prev_end = 0.0
        for o, ((machine, start), op_spec) in enumerate(zip(job_plan, job_spec)):
            proc = _proc_time(op_spec, machine)
            if proc is None:
                return infeasible("assignment", f"op ({j},{o}) on incompatible machine {machine}")
            if start < -eps:
                return infeasible("precedence", f"op ({j},{o}) starts before time zero")
            if start + eps < prev_end:
                return infeasible("precedence", f"op ({j},{o}) overlaps its predecessor")
            prev_end = start + proc
            per_machine.setdefault(machine, []).append((start, start + proc, f"({j},{o})"))
    for machine, intervals in per_machine.items():
        intervals.sort()
        for (s1, e1, a), (s2, e2, b) in zip(intervals, intervals[1:]):
            if s2 + eps < e1:
                return infeasible("machine_overlap", f"{a} and {b} overlap on machine {machine}")
    return FEASIBLE


def objective(instance: CopInstance, schedule: Schedule) -> float:
    jobs = instance.payload["jobs"]
    makespan = 0.0
    for job_spec, job_plan in zip(jobs, schedule):
        for (machine, start), op_spec in zip(job_plan, job_spec):
            makespan = max(makespan, start + _proc_time(op_spec, machine))
    return makespan


def dispatch(instance: CopInstance, assignment: list[list[int]], order: list[int]) -> Schedule:
    """Earliest-start list scheduling: ``order`` names the job whose next
    operation is dispatched at each step."""
    jobs = instance.payload["jobs"]
    job_ready = [0.0] * len(jobs)
    mach_ready: dict[int, float] = {}
    next_op = [0] * len(jobs)
    schedule: Schedule = [[None] * len(spec) for spec in jobs]
    for j in order:
        o = next_op[j]
        machine = assignment[j][o]
        proc = _proc_time(jobs[j][o], machine)
        start = max(job_ready[j], mach_ready.get(machine, 0.0))
        schedule[j][o] = [machine, start]
        job_ready[j] = start + proc
        mach_ready[machine] = start + proc
        next_op[j] += 1
    return schedule


def _interleavings(counts: list[int]):
    if all(c == 0 for c in counts):
        yield []
        return
    for j, c in enumerate(counts):
        if c > 0:
            counts[j] -= 1
            for rest in _interleavings(counts):
                yield [j] + rest
            counts[j] += 1


def oracle_optimum(instance: CopInstance) -> tuple[float, Schedule]:
    """Exact minimum makespan over all machine assignments and all dispatch
    interleavings (covers every semi-active schedule)."""
    jobs = instance.payload["jobs"]
    total_ops = sum(len(spec) for spec in jobs)
    if total_ops > ORACLE_MAX_OPERATIONS:
        raise TooLarge(f"oracle bound is {ORACLE_MAX_OPERATIONS} operations, got {total_ops}")
    op_choices = [[ [k for k, _ in spec] for spec in job] for job in jobs]
    flat_choices = [choices for job in op_choices for choices in job]
    shape = [len(spec) for spec in jobs]

    best_cost, best_schedule = math.inf, None
    for combo in itertools.product(*flat_choices):
        assignment: list[list[int]] = []
        idx = 0
        for count in shape:
            assignment.append(list(combo[idx : idx + count]))
            idx += count
        for order in _interleavings(shape.copy()):
            schedule = dispatch(instance, assignment, order)
            cost = objective(instance, schedule)
            if cost < best_cost:
                best_cost, best_schedule = cost, schedule
    return best_cost, best_schedule


def random_feasible(instance: CopInstance, rng: random.Random) -> Schedule:
    jobs = instance.payload["jobs"]
    assignment = [[rng.choice([k for k, _ in spec]) for spec in job] for job in jobs]
    tokens = [j for j, job in enumerate(jobs) for _ in job]
    rng.shuffle(tokens)
    return dispatch(instance, assignment, tokens)


def task_description() -> str:
    return (
        "Flexible Job Shop Scheduling: each job is a fixed chain of operations; every "
        "operation runs on one machine chosen from its compatible set, with a "
        "machine-dependent processing time. A machine processes one operation at a time "
        "and operations of a job must respect chain order. Minimize the makespan.\n"
        "Implement `solve_fjsp(jobs, num_machines)` where jobs[j][o] is the list of "
        "[machine_index, processing_time] options for operation o of job j. Return a "
        "nested list shaped like jobs where each entry is [chosen_machine, start_time]."
    )


def function_template() -> str:
    return (
        "def solve_fjsp(jobs, num_machines):\n"
        '    """Return per-operation [machine, start_time] choices.\n'
        "\n"
        "    Args:\n"
        "        jobs: jobs[j][o] lists the [machine, time] options of operation o of job j.\n"
        "        num_machines: total machine count.\n"
        "\n"
        "    Returns:\n"
        "        Nested list shaped like jobs: result[j][o] == [machine, start_time].\n"
        '    """\n'
        "    pass\n"
    )
