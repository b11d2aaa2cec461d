"""Multi-Mode Resource-Constrained Project Scheduling: mode trade-offs,
renewable/non-renewable budgets, serial-schedule oracle for tiny projects."""

from __future__ import annotations

import itertools
import math
import random

from ..errors import TooLarge
from .base import FEASIBLE, CopInstance, Verdict, infeasible, require, rng_for

PROBLEM = "mrcpsp"
DIRECTION = "min"
ENTRY_NAME = "solve_mrcpsp"
ORACLE_MAX_JOBS = 5

TIER_JOBS = {"small": 10, "medium": 20, "large": 30, "extra_large": 40}
N_RENEWABLE = 2
N_NONRENEWABLE = 2
MODES_PER_JOB = 3
BUDGET_FACTOR = 0.8

# solution: per activity, [mode_index, finish_time]; activity 0 and the last
# activity are zero-duration dummies (project start / sink).
Plan = list[list[int]]


def _mode_matrix(payload: dict) -> list[list[list]]:
    return payload["modes"]


def _greedy_mode_witness(modes: list[list[list]], caps: list[int]) -> bool:
    totals = [0] * len(caps)
    for activity_modes in modes:
        best = min(
            activity_modes,
            key=lambda m: sum(m[2][r] / caps[r] for r in range(len(caps))),
        )
        for r in range(len(caps)):
            totals[r] += best[2][r]
    return all(totals[r] <= caps[r] for r in range(len(caps)))


def _build(jobs: int, modes_per_job: int, tier: str, seed: int, rng: random.Random) -> CopInstance:
    for _ in range(200):
        activities = jobs + 2
        modes: list[list[list]] = []
        modes.append([[0, [0] * N_RENEWABLE, [0] * N_NONRENEWABLE]])
        for _ in range(jobs):
            activity_modes = []
            for _ in range(modes_per_job):
                duration = rng.randint(1, 10)
                renewable = [rng.randint(1, 5) for _ in range(N_RENEWABLE)]
                nonrenewable = [rng.randint(1, 5) for _ in range(N_NONRENEWABLE)]
                activity_modes.append([duration, renewable, nonrenewable])
            modes.append(activity_modes)
        modes.append([[0, [0] * N_RENEWABLE, [0] * N_NONRENEWABLE]])

        precedence = []
        for j in range(1, jobs + 1):
            pool = list(range(0, j))
            for p in rng.sample(pool, k=min(len(pool), rng.randint(1, 2))):
                precedence.append([p, j])
        has_successor = {i for i, _ in precedence}
        for j in range(1, jobs + 1):
            if j not in has_successor:
                precedence.append([j, jobs + 1])

        renewable_caps = [
            max(m[1][r] for acts in modes for m in acts) + rng.randint(0, 3)
            for r in range(N_RENEWABLE)
        ]
        job_modes = modes[1:-1]
        nonrenewable_caps = [
            math.ceil(BUDGET_FACTOR * sum(
                sum(m[2][r] for m in acts) / len(acts) for acts in job_modes
            ))
            for r in range(N_NONRENEWABLE)
        ]
        if _greedy_mode_witness(job_modes, nonrenewable_caps):
            break
    else:
        raise RuntimeError("could not draw an MRCPSP instance with a feasible mode vector")
    payload = {
        "num_jobs": jobs,
        "num_activities": activities,
        "modes": modes,
        "precedence": precedence,
        "renewable_capacities": renewable_caps,
        "nonrenewable_capacities": nonrenewable_caps,
    }
    return CopInstance(PROBLEM, tier, seed, sigma=jobs, payload=payload)


def generate(tier: str, seed: int) -> CopInstance:
    return _build(TIER_JOBS[tier], MODES_PER_JOB, tier, seed, rng_for(PROBLEM, tier, seed))


def generate_tiny(seed: int) -> CopInstance:
    rng = rng_for(PROBLEM, "tiny", seed)
    return _build(rng.randint(3, 4), 2, "tiny", seed, rng)


def decode(instance: CopInstance, raw) -> Plan:
    modes = _mode_matrix(instance.payload)
    require(isinstance(raw, list) and len(raw) == len(modes), "one [mode, finish] pair per activity expected")
    plan: Plan = []
    for a, item in enumerate(raw):
        require(isinstance(item, (list, tuple)) and len(item) == 2, "activity entry must be [mode, finish]")
        mode, finish = item
        require(isinstance(mode, int) and not isinstance(mode, bool), "mode must be an integer")
        require(isinstance(finish, int) and not isinstance(finish, bool), "finish must be an integer")
        require(0 <= mode < len(modes[a]), f"mode index out of range for activity {a}")
        plan.append([mode, finish])
    return plan


def validate(instance: CopInstance, plan: Plan) -> Verdict:
    payload = instance.payload
    modes = _mode_matrix(payload)
    starts = []
    for a, (mode, finish) in enumerate(plan):
        duration = modes[a][mode][0]
        start = finish - duration
        if start < 0:
            return infeasible("precedence", f"activity {a} starts before time zero")
        starts.append(start)
    for i, j in payload["precedence"]:
        if plan[i][1] > starts[j]:
            return infeasible("precedence", f"activity {j} starts before predecessor {i} finishes")
    for r, cap in enumerate(payload["nonrenewable_capacities"]):
        used = sum(modes[a][mode][2][r] for a, (mode, _) in enumerate(plan))
        if used > cap:
            return infeasible("nonrenewable", f"resource {r} usage {used} exceeds {cap}")
    horizon = max((f for _, f in plan), default=0)
    for r, cap in enumerate(payload["renewable_capacities"]):
        for t in range(horizon):
            used = 0
            for a, (mode, finish) in enumerate(plan):
                duration = modes[a][mode][0]
                if finish - duration <= t < finish:
                    used += modes[a][mode][1][r]
            if used > cap:
                return infeasible("renewable", f"resource {r} over capacity in period {t}")
    return FEASIBLE


def objective(instance: CopInstance, plan: Plan) -> float:
    return float(plan[-1][1])


def _predecessors(payload: dict) -> dict[int, list[int]]:
    preds: dict[int, list[int]] = {a: [] for a in range(payload["num_activities"])}
    for i, j in payload["precedence"]:
        preds[j].append(i)
    return preds


def serial_schedule(instance: CopInstance, mode_vector: list[int], order: list[int]) -> Plan:
    """Serial schedule generation: place each activity (in a precedence-
    consistent order) at the earliest renewable-feasible start."""
    payload = instance.payload
    modes = _mode_matrix(payload)
    caps = payload["renewable_capacities"]
    preds = _predecessors(payload)
    usage: dict[int, list[int]] = {}
    finish = [0] * payload["num_activities"]
    for a in order:
        mode = modes[a][mode_vector[a]]
        duration, renewable = mode[0], mode[1]
        start = max((finish[p] for p in preds[a]), default=0)
        while True:
            ok = True
            for t in range(start, start + duration):
                slot = usage.get(t, [0] * len(caps))
                if any(slot[r] + renewable[r] > caps[r] for r in range(len(caps))):
                    ok = False
                    break
            if ok:
                break
            start += 1
        for t in range(start, start + duration):
            slot = usage.setdefault(t, [0] * len(caps))
            for r in range(len(caps)):
                slot[r] += renewable[r]
        finish[a] = start + duration
    return [[mode_vector[a], finish[a]] for a in range(payload["num_activities"])]


def _topological_orders(payload: dict):
    preds = _predecessors(payload)
    n = payload["num_activities"]
    indegree = {a: len(preds[a]) for a in range(n)}
    order: list[int] = []

    def backtrack():
        if len(order) == n:
            yield list(order)
            return
        for a in range(n):
            if a not in order and indegree[a] == 0:
                order.append(a)
                for i, j in payload["precedence"]:
                    if i == a:
                        indegree[j] -= 1
                yield from backtrack()
                order.pop()
                for i, j in payload["precedence"]:
                    if i == a:
                        indegree[j] += 1

    yield from backtrack()


def _feasible_mode_vectors(payload: dict):
    modes = _mode_matrix(payload)
    caps = payload["nonrenewable_capacities"]
    for combo in itertools.product(*[range(len(acts)) for acts in modes]):
        usage = [0] * len(caps)
        for a, m in enumerate(combo):
            for r in range(len(caps)):
                usage[r] += modes[a][m][2][r]
        if all(usage[r] <= caps[r] for r in range(len(caps))):
            yield list(combo)


def oracle_optimum(instance: CopInstance) -> tuple[float, Plan]:
    """Exact minimum makespan over feasible mode vectors and all serial
    schedules (every active schedule is reachable this way)."""
    payload = instance.payload
    if payload["num_jobs"] > ORACLE_MAX_JOBS:
        raise TooLarge(f"oracle bound is {ORACLE_MAX_JOBS} jobs, got {payload['num_jobs']}")
    best_cost, best_plan = math.inf, None
    orders = list(_topological_orders(payload))
    for mode_vector in _feasible_mode_vectors(payload):
        for order in orders:
            plan = serial_schedule(instance, mode_vector, order)
            cost = objective(instance, plan)
            if cost < best_cost:
                best_cost, best_plan = cost, plan
    return best_cost, best_plan


def random_feasible(instance: CopInstance, rng: random.Random) -> Plan:
    payload = instance.payload
    modes = _mode_matrix(payload)
    caps = payload["nonrenewable_capacities"]
    for _ in range(200):
        vector = [rng.randrange(len(acts)) for acts in modes]
        usage = [0] * len(caps)
        for a, m in enumerate(vector):
            for r in range(len(caps)):
                usage[r] += modes[a][m][2][r]
        if all(usage[r] <= caps[r] for r in range(len(caps))):
            break
    else:
        # capacity-normalized witness, feasible by the generator's guarantee
        vector = [
            min(range(len(acts)), key=lambda m: sum(acts[m][2][r] / caps[r] for r in range(len(caps))))
            for acts in modes
        ]
    preds = _predecessors(payload)
    n = payload["num_activities"]
    remaining = set(range(n))
    order: list[int] = []
    while remaining:
        ready = [a for a in remaining if all(p not in remaining for p in preds[a])]
        pick = rng.choice(sorted(ready))
        order.append(pick)
        remaining.discard(pick)
    return serial_schedule(instance, vector, order)


def task_description() -> str:
    return (
        "Multi-Mode Resource-Constrained Project Scheduling: activities form a "
        "precedence DAG; activity 0 and the last activity are zero-duration dummies. "
        "Each activity runs in one of its modes, fixing its duration, per-period "
        "renewable resource usage and total non-renewable usage. Renewable capacities "
        "bind in every period, non-renewable capacities bind over the whole project. "
        "Minimize the finish time of the final activity.\n"
        "Implement `solve_mrcpsp(modes, precedence, renewable_capacities, "
        "nonrenewable_capacities)` where modes[a] lists [duration, renewable_usage, "
        "nonrenewable_usage] options for activity a and precedence is a list of [i, j] "
        "edges (i before j). Return one [mode_index, finish_time] pair per activity "
        "with integer finish times."
    )


def function_template() -> str:
    return (
        "def solve_mrcpsp(modes, precedence, renewable_capacities, nonrenewable_capacities):\n"
        '    """Return per-activity [mode_index, finish_time] pairs.\n'
        "\n"
        "    Args:\n"
        "        modes: modes[a] lists [duration, renewable_usage, nonrenewable_usage] options.\n"
        "        precedence: list of [i, j] pairs meaning i finishes before j starts.\n"
        "        renewable_capacities: per-period capacity per renewable resource.\n"
        "        nonrenewable_capacities: total capacity per non-renewable resource.\n"
        '    """\n'
        "    pass\n"
    )
