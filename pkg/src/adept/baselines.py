"""Seed and sanity programs.

Host-side constructive solvers build feasible solutions by repeated argmax
over the feasible candidate set under a named greedy priority rule (ties
broken by lowest index).  The matching guest source texts implement the same
logic as self-contained programs conforming to the worker protocol; they
double as cold-start fixtures for the offline backend.
"""

from __future__ import annotations

import math

from .cops import CopInstance, get as cop_module
from .errors import ConstructionStuck

GREEDY_CONSTRUCTIVE = "greedy_constructive"
RANDOM_FEASIBLE = "random_feasible"
BASELINE_KINDS = (GREEDY_CONSTRUCTIVE, RANDOM_FEASIBLE)

PRIORITY_RULES = {
    "mis": "min_residual_degree",
    "cvrp": "nearest_feasible",
    "cflp": "cheapest_marginal",
    "fjsp": "spt_on_earliest_machine",
    "cevrptw": "nearest_feasible_with_station_fallback",
    "mrcpsp": "earliest_feasible_cheapest_mode",
}


def constructive_solve(instance: CopInstance, priority: str | None = None):
    """Deterministic greedy construction under the problem's named rule."""
    expected = PRIORITY_RULES[instance.problem]
    if priority is not None and priority != expected:
        raise ValueError(f"unknown priority rule {priority!r} for {instance.problem}")
    solver = _CONSTRUCTIVE[instance.problem]
    solution = solver(instance)
    verdict = cop_module(instance.problem).validate(instance, solution)
    if not verdict:
        raise ConstructionStuck(f"greedy construction infeasible: {verdict.reason}")
    return solution


def _solve_mis(instance: CopInstance):
    n = instance.payload["num_vertices"]
    neighbors = [set() for _ in range(n)]
    for u, v in instance.payload["edges"]:
        neighbors[u].add(v)
        neighbors[v].add(u)
    alive = set(range(n))
    chosen = []
    while alive:
        best = min(alive, key=lambda v: (len(neighbors[v] & alive), v))
        chosen.append(best)
        alive -= neighbors[best] | {best}
    return sorted(chosen)


def _solve_cvrp(instance: CopInstance):
    payload = instance.payload
    coords = payload["coordinates"]
    demands = payload["demands"]
    capacity = payload["vehicle_capacity"]
    unvisited = set(range(1, payload["num_customers"] + 1))
    routes = []
    while unvisited:
        route, load, cur = [], 0, 0
        while True:
            feasible = [c for c in sorted(unvisited) if load + demands[c] <= capacity]
            if not feasible:
                break
            best = min(feasible, key=lambda c: (math.dist(coords[cur], coords[c]), c))
            route.append(best)
            load += demands[best]
            unvisited.discard(best)
            cur = best
        if not route:
            raise ConstructionStuck("no customer fits an empty vehicle")
        routes.append(route)
    return routes


def _solve_cflp(instance: CopInstance):
    payload = instance.payload
    caps = payload["facility_capacities"]
    demands = payload["customer_demands"]
    costs = payload["assignment_costs"]
    fixed = payload["fixed_costs"]
    m, n = payload["num_facilities"], payload["num_customers"]
    residual = list(caps)
    opened = [False] * m
    assignment = [0] * n
    for j in sorted(range(n), key=lambda j: -demands[j]):
        best, best_cost = None, None
        for i in range(m):
            if residual[i] < demands[j]:
                continue
            marginal = costs[i][j] + (0.0 if opened[i] else fixed[i] * demands[j] / max(caps[i], 1))
            if best_cost is None or marginal < best_cost:
                best, best_cost = i, marginal
        if best is None:
            raise ConstructionStuck(f"no facility can absorb customer {j}")
        assignment[j] = best
        residual[best] -= demands[j]
        opened[best] = True
    return assignment


def _solve_fjsp(instance: CopInstance):
    jobs = instance.payload["jobs"]
    next_op = [0] * len(jobs)
    job_ready = [0.0] * len(jobs)
    mach_ready: dict[int, float] = {}
    schedule = [[None] * len(job) for job in jobs]
    remaining = sum(len(job) for job in jobs)
    while remaining:
        pick = None
        for j, job in enumerate(jobs):
            o = next_op[j]
            if o >= len(job):
                continue
            option = min(
                ((max(job_ready[j], mach_ready.get(k, 0.0)), p, k) for k, p in job[o]),
            )
            start, proc, machine = option
            key = (proc, start, j)
            if pick is None or key < pick[0]:
                pick = (key, j, machine, proc, start)
        _, j, machine, proc, start = pick
        o = next_op[j]
        schedule[j][o] = [machine, start]
        job_ready[j] = start + proc
        mach_ready[machine] = start + proc
        next_op[j] += 1
        remaining -= 1
    return schedule


def _solve_cevrptw(instance: CopInstance):
    from .cops import cevrptw as mod

    payload = instance.payload
    matrix = payload["distance_matrix"]
    stations = payload["station_indices"]
    n = payload["num_customers"]
    unserved = set(range(1, n + 1))
    routes = []
    route: list[int] = []
    while unserved:
        cur = route[-1] if route else 0
        best, best_d = None, None
        for c in sorted(unserved):
            if mod._simulate_route(instance, route + [c]):
                d = matrix[cur][c]
                if best_d is None or d < best_d:
                    best, best_d = c, d
        if best is not None:
            route.append(best)
            unserved.discard(best)
            continue
        if route:
            routes.append(route)
            route = []
            continue
        detour, detour_cost = None, None
        for c in sorted(unserved):
            for s in stations:
                if mod._simulate_route(instance, [s, c]):
                    cost = matrix[0][s] + matrix[s][c]
                    if detour_cost is None or cost < detour_cost:
                        detour, detour_cost = (s, c), cost
        if detour is None:
            raise ConstructionStuck(f"customers unreachable: {sorted(unserved)[:5]}")
        route = [detour[0], detour[1]]
        unserved.discard(detour[1])
    if route:
        routes.append(route)
    return routes


def _solve_mrcpsp(instance: CopInstance):
    payload = instance.payload
    modes = payload["modes"]
    renewable_caps = payload["renewable_capacities"]
    nonrenewable_caps = payload["nonrenewable_capacities"]
    n = payload["num_activities"]
    preds: list[list[int]] = [[] for _ in range(n)]
    for i, j in payload["precedence"]:
        preds[j].append(i)
    # Achievable fallback mode per activity (capacity-normalized consumption);
    # reserving its usage for unscheduled work keeps the budget completable.
    fallback = [
        min(range(len(acts)), key=lambda m: sum(acts[m][2][r] / nonrenewable_caps[r] for r in range(len(nonrenewable_caps))))
        for acts in modes
    ]
    budget_left = list(nonrenewable_caps)
    unscheduled = set(range(n))
    usage: dict[int, list[int]] = {}
    finish = [None] * n
    plan = [None] * n

    def mode_ok(a: int, mode) -> bool:
        # keep enough budget for the fallback modes of everything else
        for r in range(len(budget_left)):
            reserve = sum(modes[x][fallback[x]][2][r] for x in unscheduled if x != a)
            if mode[2][r] + reserve > budget_left[r]:
                return False
        return True

    def earliest_start(a: int, duration: int, renewable) -> int:
        start = max((finish[p] for p in preds[a]), default=0)
        while True:
            if all(
                usage.get(t, [0] * len(renewable_caps))[r] + renewable[r] <= renewable_caps[r]
                for t in range(start, start + duration)
                for r in range(len(renewable_caps))
            ):
                return start
            start += 1

    while unscheduled:
        ready = sorted(
            a for a in unscheduled if all(finish[p] is not None for p in preds[a])
        )
        pick = None
        for a in ready:
            feasible = [
                (m_idx, m) for m_idx, m in enumerate(modes[a]) if mode_ok(a, m)
            ]
            if not feasible:
                continue
            m_idx, mode = min(feasible, key=lambda item: (item[1][0], item[0]))
            start = earliest_start(a, mode[0], mode[1])
            key = (start, a)
            if pick is None or key < pick[0]:
                pick = (key, a, m_idx, mode, start)
        if pick is None:
            raise ConstructionStuck("no non-renewable-feasible mode for any ready activity")
        _, a, m_idx, mode, start = pick
        duration, renewable = mode[0], mode[1]
        for t in range(start, start + duration):
            slot = usage.setdefault(t, [0] * len(renewable_caps))
            for r in range(len(renewable_caps)):
                slot[r] += renewable[r]
        finish[a] = start + duration
        plan[a] = [m_idx, finish[a]]
        for r in range(len(budget_left)):
            budget_left[r] -= mode[2][r]
        unscheduled.discard(a)
    return plan


_CONSTRUCTIVE = {
    "mis": _solve_mis,
    "cvrp": _solve_cvrp,
    "cflp": _solve_cflp,
    "fjsp": _solve_fjsp,
    "cevrptw": _solve_cevrptw,
    "mrcpsp": _solve_mrcpsp,
}


def baseline_guest_source(problem: str, kind: str = GREEDY_CONSTRUCTIVE) -> str:
    """Self-contained guest program implementing the named baseline."""
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline kind {kind!r}")
    return _GUEST_SOURCES[problem][kind]


_MIS_GREEDY = '''\
def build_neighbors(adjacency_matrix, n_nodes):
    neighbors = []
    for i in range(n_nodes):
        row = adjacency_matrix[i]
        neighbors.append({j for j in range(n_nodes) if row[j]})
    return neighbors


def pick_min_degree(alive, neighbors):
    best = -1
    best_key = None
    for v in sorted(alive):
        key = len(neighbors[v] & alive)
        if best_key is None or key < best_key:
            best, best_key = v, key
    return best


def solve_mis(adjacency_matrix, n_nodes):
    neighbors = build_neighbors(adjacency_matrix, n_nodes)
    alive = set(range(n_nodes))
    chosen = []
    while alive:
        v = pick_min_degree(alive, neighbors)
        chosen.append(v)
        alive -= neighbors[v] | {v}
    return sorted(chosen)
'''

_MIS_RANDOM = '''\
import random


def solve_mis(adjacency_matrix, n_nodes):
    rng = random.Random(20240 + n_nodes)
    neighbors = [set() for _ in range(n_nodes)]
    for i in range(n_nodes):
        for j in range(n_nodes):
            if adjacency_matrix[i][j]:
                neighbors[i].add(j)
    order = list(range(n_nodes))
    rng.shuffle(order)
    chosen = set()
    for v in order:
        if not neighbors[v] & chosen:
            chosen.add(v)
    return sorted(chosen)
'''

_CVRP_GREEDY = '''\
def pick_next(cur, unvisited, load, distance_matrix, demands, capacity):
    best = None
    best_d = None
    for c in sorted(unvisited):
        if load + demands[c] <= capacity:
            d = distance_matrix[cur][c]
            if best_d is None or d < best_d:
                best, best_d = c, d
    return best


def solve_cvrp(distance_matrix, demands, vehicle_capacity):
    n = len(demands) - 1
    unvisited = set(range(1, n + 1))
    routes = []
    while unvisited:
        route = []
        load = 0
        cur = 0
        while True:
            nxt = pick_next(cur, unvisited, load, distance_matrix, demands, vehicle_capacity)
            if nxt is None:
                break
            route.append(nxt)
            load += demands[nxt]
            unvisited.discard(nxt)
            cur = nxt
        routes.append(route)
    return routes
'''

_CVRP_RANDOM = '''\
import random


def solve_cvrp(distance_matrix, demands, vehicle_capacity):
    n = len(demands) - 1
    rng = random.Random(777 + n)
    order = list(range(1, n + 1))
    rng.shuffle(order)
    routes = []
    route = []
    load = 0
    for c in order:
        if load + demands[c] > vehicle_capacity:
            routes.append(route)
            route = []
            load = 0
        route.append(c)
        load += demands[c]
    if route:
        routes.append(route)
    return routes
'''

_CFLP_GREEDY = '''\
import numpy as np


def marginal_costs(j, demand, costs, fixed, caps, residual, opened):
    marginal = costs[:, j] + np.where(opened, 0.0, fixed * (demand / np.maximum(caps, 1.0)))
    return np.where(residual >= demand, marginal, np.inf)


def solve_cflp(facility_capacities, customer_demands, assignment_costs, fixed_costs):
    caps = np.array(facility_capacities, dtype=float)
    residual = caps.copy()
    costs = np.array(assignment_costs, dtype=float)
    fixed = np.array(fixed_costs, dtype=float)
    opened = np.zeros(len(facility_capacities), dtype=bool)
    n = len(customer_demands)
    assignment = [0] * n
    for j in sorted(range(n), key=lambda j: -customer_demands[j]):
        demand = customer_demands[j]
        scores = marginal_costs(j, demand, costs, fixed, caps, residual, opened)
        i = int(np.argmin(scores))
        assignment[j] = i
        residual[i] -= demand
        opened[i] = True
    return assignment
'''

_CFLP_RANDOM = '''\
import random


def solve_cflp(facility_capacities, customer_demands, assignment_costs, fixed_costs):
    n = len(customer_demands)
    m = len(facility_capacities)
    rng = random.Random(4242 + n)
    residual = list(facility_capacities)
    assignment = [0] * n
    for j in sorted(range(n), key=lambda j: -customer_demands[j]):
        options = [i for i in range(m) if residual[i] >= customer_demands[j]]
        if not options:
            i = max(range(m), key=lambda i: residual[i])
        else:
            i = rng.choice(options)
        assignment[j] = i
        residual[i] -= customer_demands[j]
    return assignment
'''

_FJSP_GREEDY = '''\
def earliest_option(options, job_ready, machine_ready):
    best = None
    for machine, proc in options:
        start = max(job_ready, machine_ready.get(machine, 0))
        key = (start, proc, machine)
        if best is None or key < best[0]:
            best = (key, machine, proc, start)
    return best


def solve_fjsp(jobs, num_machines):
    next_op = [0] * len(jobs)
    job_ready = [0] * len(jobs)
    machine_ready = {}
    schedule = [[None] * len(job) for job in jobs]
    remaining = sum(len(job) for job in jobs)
    while remaining:
        pick = None
        for j in range(len(jobs)):
            o = next_op[j]
            if o >= len(jobs[j]):
                continue
            key, machine, proc, start = earliest_option(jobs[j][o], job_ready[j], machine_ready)
            cand = (proc, start, j)
            if pick is None or cand < pick[0]:
                pick = (cand, j, machine, proc, start)
        _, j, machine, proc, start = pick
        o = next_op[j]
        schedule[j][o] = [machine, start]
        job_ready[j] = start + proc
        machine_ready[machine] = start + proc
        next_op[j] += 1
        remaining -= 1
    return schedule
'''

_FJSP_RANDOM = '''\
import random


def solve_fjsp(jobs, num_machines):
    rng = random.Random(31 + len(jobs))
    tokens = []
    for j, job in enumerate(jobs):
        tokens.extend([j] * len(job))
    rng.shuffle(tokens)
    next_op = [0] * len(jobs)
    job_ready = [0] * len(jobs)
    machine_ready = {}
    schedule = [[None] * len(job) for job in jobs]
    for j in tokens:
        o = next_op[j]
        machine, proc = rng.choice(jobs[j][o])
        start = max(job_ready[j], machine_ready.get(machine, 0))
        schedule[j][o] = [machine, start]
        job_ready[j] = start + proc
        machine_ready[machine] = start + proc
        next_op[j] += 1
    return schedule
'''

_CEVRPTW_GREEDY = '''\
def route_feasible(route, distance_matrix, demands, time_windows, service_times, capacity, battery, stations):
    load = 0
    for node in route:
        load += demands[node]
    if load > capacity:
        return False
    clock = 0.0
    energy = battery
    prev = 0
    for node in route:
        leg = distance_matrix[prev][node]
        arrive = clock + leg
        if arrive > time_windows[node][1] + 1e-9:
            return False
        energy -= leg
        if energy < -1e-9:
            return False
        if node in stations:
            energy = battery
        clock = max(arrive, time_windows[node][0]) + service_times[node]
        prev = node
    leg = distance_matrix[prev][0]
    if clock + leg > time_windows[0][1] + 1e-9:
        return False
    if energy - leg < -1e-9:
        return False
    return True


def solve_cevrptw(distance_matrix, demands, time_windows, service_times,
                  vehicle_capacity, battery_capacity, station_indices):
    stations = set(station_indices)
    n = len(demands)
    unserved = {i for i in range(1, n) if i not in stations}
    flat = [0]
    route = []
    while unserved:
        cur = route[-1] if route else 0
        best = None
        best_d = None
        for c in sorted(unserved):
            if route_feasible(route + [c], distance_matrix, demands, time_windows,
                              service_times, vehicle_capacity, battery_capacity, stations):
                d = distance_matrix[cur][c]
                if best_d is None or d < best_d:
                    best, best_d = c, d
        if best is not None:
            route.append(best)
            unserved.discard(best)
            continue
        if route:
            flat.extend(route)
            flat.append(0)
            route = []
            continue
        placed = False
        for c in sorted(unserved):
            for s in station_indices:
                if route_feasible([s, c], distance_matrix, demands, time_windows,
                                  service_times, vehicle_capacity, battery_capacity, stations):
                    route = [s, c]
                    unserved.discard(c)
                    placed = True
                    break
            if placed:
                break
        if not placed:
            break
    if route:
        flat.extend(route)
        flat.append(0)
    if flat[-1] != 0:
        flat.append(0)
    return flat
'''

_CEVRPTW_RANDOM = '''\
import random


def solve_cevrptw(distance_matrix, demands, time_windows, service_times,
                  vehicle_capacity, battery_capacity, station_indices):
    stations = set(station_indices)
    n = len(demands)
    customers = [i for i in range(1, n) if i not in stations]
    rng = random.Random(909 + n)
    rng.shuffle(customers)
    flat = [0]
    for c in customers:
        flat.append(c)
        flat.append(0)
    return flat
'''

_MRCPSP_GREEDY = '''\
def fallback_modes(modes, nonrenewable_capacities):
    chosen = []
    for acts in modes:
        best = 0
        best_load = None
        for idx, mode in enumerate(acts):
            load = 0.0
            for r in range(len(nonrenewable_capacities)):
                load += mode[2][r] / nonrenewable_capacities[r]
            if best_load is None or load < best_load:
                best, best_load = idx, load
        chosen.append(best)
    return chosen


def pick_mode(activity_modes, budget_left, reserve):
    best = None
    for idx, mode in enumerate(activity_modes):
        ok = True
        for r in range(len(budget_left)):
            if mode[2][r] + reserve[r] > budget_left[r]:
                ok = False
                break
        if ok and (best is None or mode[0] < activity_modes[best][0]):
            best = idx
    return best


def earliest_start(preds_a, finish, duration, renewable, usage, renewable_capacities):
    start = 0
    for p in preds_a:
        if finish[p] > start:
            start = finish[p]
    while True:
        ok = True
        for t in range(start, start + duration):
            slot = usage.get(t)
            if slot is None:
                continue
            for r in range(len(renewable_capacities)):
                if slot[r] + renewable[r] > renewable_capacities[r]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return start
        start += 1


def solve_mrcpsp(modes, precedence, renewable_capacities, nonrenewable_capacities):
    n = len(modes)
    preds = [[] for _ in range(n)]
    for i, j in precedence:
        preds[j].append(i)
    fallback = fallback_modes(modes, nonrenewable_capacities)
    budget_left = list(nonrenewable_capacities)
    unscheduled = set(range(n))
    usage = {}
    finish = [None] * n
    plan = [None] * n
    while unscheduled:
        ready = sorted(a for a in unscheduled
                       if all(finish[p] is not None for p in preds[a]))
        pick = None
        for a in ready:
            reserve = [0] * len(budget_left)
            for x in unscheduled:
                if x != a:
                    for r in range(len(budget_left)):
                        reserve[r] += modes[x][fallback[x]][2][r]
            m_idx = pick_mode(modes[a], budget_left, reserve)
            if m_idx is None:
                continue
            duration = modes[a][m_idx][0]
            renewable = modes[a][m_idx][1]
            start = earliest_start(preds[a], finish, duration, renewable, usage, renewable_capacities)
            key = (start, a)
            if pick is None or key < pick[0]:
                pick = (key, a, m_idx, start)
        if pick is None:
            return plan
        _, a, m_idx, start = pick
        duration = modes[a][m_idx][0]
        renewable = modes[a][m_idx][1]
        for t in range(start, start + duration):
            slot = usage.get(t)
            if slot is None:
                slot = [0] * len(renewable_capacities)
                usage[t] = slot
            for r in range(len(renewable_capacities)):
                slot[r] += renewable[r]
        finish[a] = start + duration
        plan[a] = [m_idx, finish[a]]
        for r in range(len(budget_left)):
            budget_left[r] -= modes[a][m_idx][2][r]
        unscheduled.discard(a)
    return plan
'''

_MRCPSP_RANDOM = '''\
import random


def solve_mrcpsp(modes, precedence, renewable_capacities, nonrenewable_capacities):
    n = len(modes)
    rng = random.Random(555 + n)
    preds = [[] for _ in range(n)]
    for i, j in precedence:
        preds[j].append(i)
    fallback = []
    for acts in modes:
        best = 0
        best_load = None
        for idx, mode in enumerate(acts):
            load = 0.0
            for r in range(len(nonrenewable_capacities)):
                load += mode[2][r] / nonrenewable_capacities[r]
            if best_load is None or load < best_load:
                best, best_load = idx, load
        fallback.append(best)
    budget_left = list(nonrenewable_capacities)
    unscheduled = set(range(n))
    usage = {}
    finish = [None] * n
    plan = [None] * n
    while unscheduled:
        ready = sorted(a for a in unscheduled
                       if all(finish[p] is not None for p in preds[a]))
        a = rng.choice(ready)
        reserve = [0] * len(budget_left)
        for x in unscheduled:
            if x != a:
                for r in range(len(budget_left)):
                    reserve[r] += modes[x][fallback[x]][2][r]
        options = []
        for idx, mode in enumerate(modes[a]):
            if all(mode[2][r] + reserve[r] <= budget_left[r] for r in range(len(budget_left))):
                options.append(idx)
        m_idx = rng.choice(options) if options else fallback[a]
        duration = modes[a][m_idx][0]
        renewable = modes[a][m_idx][1]
        start = 0
        for p in preds[a]:
            if finish[p] > start:
                start = finish[p]
        while True:
            ok = True
            for t in range(start, start + duration):
                slot = usage.get(t)
                if slot is None:
                    continue
                for r in range(len(renewable_capacities)):
                    if slot[r] + renewable[r] > renewable_capacities[r]:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                break
            start += 1
        for t in range(start, start + duration):
            slot = usage.get(t)
            if slot is None:
                slot = [0] * len(renewable_capacities)
                usage[t] = slot
            for r in range(len(renewable_capacities)):
                slot[r] += renewable[r]
        finish[a] = start + duration
        plan[a] = [m_idx, finish[a]]
        for r in range(len(budget_left)):
            budget_left[r] -= modes[a][m_idx][2][r]
        unscheduled.discard(a)
    return plan
'''

_GUEST_SOURCES = {
    "mis": {GREEDY_CONSTRUCTIVE: _MIS_GREEDY, RANDOM_FEASIBLE: _MIS_RANDOM},
    "cvrp": {GREEDY_CONSTRUCTIVE: _CVRP_GREEDY, RANDOM_FEASIBLE: _CVRP_RANDOM},
    "cflp": {GREEDY_CONSTRUCTIVE: _CFLP_GREEDY, RANDOM_FEASIBLE: _CFLP_RANDOM},
    "fjsp": {GREEDY_CONSTRUCTIVE: _FJSP_GREEDY, RANDOM_FEASIBLE: _FJSP_RANDOM},
    "cevrptw": {GREEDY_CONSTRUCTIVE: _CEVRPTW_GREEDY, RANDOM_FEASIBLE: _CEVRPTW_RANDOM},
    "mrcpsp": {GREEDY_CONSTRUCTIVE: _MRCPSP_GREEDY, RANDOM_FEASIBLE: _MRCPSP_RANDOM},
}
