"""Capacitated Electric VRP with Time Windows: battery dynamics under the
full-recharge policy, window/capacity validation, exact tiny oracle with
station insertion."""

from __future__ import annotations

import itertools
import math
import random

from ..errors import MalformedSolution, TooLarge
from .base import FEASIBLE, CopInstance, Verdict, distance_matrix, infeasible, require, rng_for

PROBLEM = "cevrptw"
DIRECTION = "min"
ENTRY_NAME = "solve_cevrptw"
ORACLE_MAX_CUSTOMERS = 4

HORIZON = 20.0
BATTERY = 5.0
SERVICE_TIME = 0.05
EPS = 1e-9

TIER_SIZE = {"small": (20, 3), "medium": (40, 4), "large": (60, 5), "extra_large": (80, 6)}

Route = list[int]


def _build(n: int, stations: int, tier: str, seed: int, rng: random.Random, q_range=(20, 40), d_range=(1, 10)) -> CopInstance:
    total = 1 + n + stations
    coords = [[rng.random(), rng.random()] for _ in range(total)]
    matrix = distance_matrix(coords)
    demands = [0] * total
    windows = [[0.0, HORIZON] for _ in range(total)]
    services = [0.0] * total
    for c in range(1, n + 1):
        demands[c] = rng.randint(*d_range)
        start = rng.uniform(0.0, 14.0)
        width = rng.uniform(2.0, 6.0)
        windows[c] = [start, min(start + width, HORIZON - 1.0)]
        services[c] = SERVICE_TIME
    for s in range(n + 1, total):
        services[s] = SERVICE_TIME  # recharge duration
    payload = {
        "num_customers": n,
        "distance_matrix": matrix,
        "demands": demands,
        "time_windows": windows,
        "service_times": services,
        "vehicle_capacity": rng.randint(*q_range),
        "battery_capacity": BATTERY,
        "station_indices": list(range(n + 1, total)),
    }
    return CopInstance(PROBLEM, tier, seed, sigma=n, payload=payload)


def generate(tier: str, seed: int) -> CopInstance:
    n, stations = TIER_SIZE[tier]
    return _build(n, stations, tier, seed, rng_for(PROBLEM, tier, seed))


def generate_tiny(seed: int) -> CopInstance:
    rng = rng_for(PROBLEM, "tiny", seed)
    # tight cargo capacity so oracle partitions routes
    return _build(rng.randint(3, 4), rng.randint(1, 2), "tiny", seed, rng, q_range=(6, 10), d_range=(1, 5))


def decode(instance: CopInstance, raw) -> list[Route]:
    """Flattened node sequence with depot-0 separators, or a list of routes."""
    require(isinstance(raw, list), "cevrptw solution must be a list")
    if all(isinstance(x, int) and not isinstance(x, bool) for x in raw):
        routes, current = [], []
        for x in raw:
            if x == 0:
                if current:
                    routes.append(current)
                    current = []
            else:
                current.append(x)
        if current:
            routes.append(current)
    elif all(isinstance(x, list) for x in raw):
        routes = []
        for route in raw:
            require(all(isinstance(v, int) and not isinstance(v, bool) for v in route), "route entries must be integers")
            core = [v for v in route if v != 0]
            inner = route[1:-1] if len(route) >= 2 else route
            require(0 not in inner, "depot appears inside a route")
            if core:
                routes.append(core)
    else:
        raise MalformedSolution("cevrptw solution mixes integers and lists")
    total = len(instance.payload["demands"])
    for route in routes:
        require(all(1 <= v < total for v in route), "node index out of range")
    return routes


def _simulate_route(instance: CopInstance, route: Route) -> Verdict:
    payload = instance.payload
    matrix = payload["distance_matrix"]
    windows = payload["time_windows"]
    services = payload["service_times"]
    demands = payload["demands"]
    stations = set(payload["station_indices"])
    battery = payload["battery_capacity"]

    load = sum(demands[v] for v in route)
    if load > payload["vehicle_capacity"]:
        return infeasible("capacity", f"route load {load} exceeds {payload['vehicle_capacity']}")

    clock = 0.0
    energy = battery
    prev = 0
    for node in route:
        leg = matrix[prev][node]
        arrival = clock + leg
        if arrival > windows[node][1] + EPS:
            return infeasible("time_window", f"arrive node {node} at {arrival:.3f} after {windows[node][1]:.3f}")
        energy -= leg
        if energy < -EPS:
            return infeasible("battery", f"energy below zero reaching node {node}")
        if node in stations:
            energy = battery
        clock = max(arrival, windows[node][0]) + services[node]
        prev = node
    leg = matrix[prev][0]
    if clock + leg > windows[0][1] + EPS:
        return infeasible("time_window", "returns to depot after closing")
    if energy - leg < -EPS:
        return infeasible("battery", "energy below zero on the return leg")
    return FEASIBLE


def validate(instance: CopInstance, routes: list[Route]) -> Verdict:
    n = instance.payload["num_customers"]
    stations = set(instance.payload["station_indices"])
    visits = [v for route in routes for v in route if v not in stations]
    if len(set(visits)) != len(visits):
        return infeasible("visit", "a customer is visited more than once")
    if set(visits) != set(range(1, n + 1)):
        missing = sorted(set(range(1, n + 1)) - set(visits))
        return infeasible("visit", f"customers not served: {missing[:5]}")
    for route in routes:
        verdict = _simulate_route(instance, route)
        if not verdict:
            return verdict
    return FEASIBLE


def objective(instance: CopInstance, routes: list[Route]) -> float:
    matrix = instance.payload["distance_matrix"]
    total = 0.0
    for route in routes:
        prev = 0
        for node in route:
            total += matrix[prev][node]
            prev = node
        total += matrix[prev][0]
    return total


def _station_variants(instance: CopInstance, order: tuple[int, ...]):
    """All ways to insert at most one station into each leg of a route.  One
    station per leg is exact here: every hop in the unit square costs less
    than the battery capacity."""
    stations = instance.payload["station_indices"]
    slots = len(order) + 1
    options: list[list[int | None]] = [[None] + list(stations) for _ in range(slots)]
    for combo in itertools.product(*options):
        route: Route = []
        for i, customer in enumerate(order):
            if combo[i] is not None:
                route.append(combo[i])
            route.append(customer)
        if combo[-1] is not None:
            route.append(combo[-1])
        yield route


def oracle_optimum(instance: CopInstance) -> tuple[float, list[Route]]:
    """Exact optimum over customer partitions, visit orders and single-slot
    station insertions."""
    n = instance.payload["num_customers"]
    if n > ORACLE_MAX_CUSTOMERS:
        raise TooLarge(f"oracle bound is {ORACLE_MAX_CUSTOMERS} customers, got {n}")
    customers = list(range(1, n + 1))

    best_route: dict[tuple[int, ...], tuple[float, Route]] = {}
    for r in range(1, n + 1):
        for subset in itertools.combinations(customers, r):
            best = None
            for order in itertools.permutations(subset):
                for route in _station_variants(instance, order):
                    if _simulate_route(instance, route):
                        cost = objective(instance, [route])
                        if best is None or cost < best[0]:
                            best = (cost, route)
            if best is not None:
                best_route[subset] = best

    best_total = [math.inf, None]

    def partitions(remaining: frozenset[int], acc_cost: float, acc: list[Route]):
        if acc_cost >= best_total[0]:
            return
        if not remaining:
            best_total[0] = acc_cost
            best_total[1] = [list(r) for r in acc]
            return
        first = min(remaining)
        rest = sorted(remaining - {first})
        for r in range(len(rest) + 1):
            for extra in itertools.combinations(rest, r):
                subset = tuple(sorted((first,) + extra))
                entry = best_route.get(subset)
                if entry is None:
                    continue
                partitions(remaining - set(subset), acc_cost + entry[0], acc + [entry[1]])

    partitions(frozenset(customers), 0.0, [])
    if best_total[1] is None:
        raise MalformedSolution("instance admits no feasible route cover")
    return best_total[0], best_total[1]


def random_feasible(instance: CopInstance, rng: random.Random) -> list[Route]:
    """Random greedy grouping with per-customer fallback routes."""
    n = instance.payload["num_customers"]
    order = list(range(1, n + 1))
    rng.shuffle(order)
    routes: list[Route] = []
    current: Route = []
    for customer in order:
        trial = current + [customer]
        if _simulate_route(instance, trial):
            current = trial
            continue
        if current:
            routes.append(current)
        current = [customer]
        if not _simulate_route(instance, current):
            current = _with_best_station(instance, customer)
    if current:
        routes.append(current)
    return routes


def _with_best_station(instance: CopInstance, customer: int) -> Route:
    best = None
    for station in instance.payload["station_indices"]:
        for route in ([station, customer], [customer, station]):
            if _simulate_route(instance, route):
                cost = objective(instance, [route])
                if best is None or cost < best[0]:
                    best = (cost, route)
    if best is None:
        raise MalformedSolution(f"customer {customer} unreachable even via stations")
    return best[1]


def task_description() -> str:
    return (
        "Capacitated Electric VRP with Time Windows: vehicles with limited cargo "
        "capacity and limited battery serve every customer exactly once within its "
        "arrival time window (waiting for the window to open is allowed). Traversing an "
        "arc consumes energy equal to its distance; visiting a charging station restores "
        "the battery to full. Routes start and end at depot node 0 before the horizon "
        "closes. Minimize total travel distance.\n"
        "Implement `solve_cevrptw(distance_matrix, demands, time_windows, service_times, "
        "vehicle_capacity, battery_capacity, station_indices)`. Node 0 is the depot; "
        "customers have positive demands; station_indices lists charging stations "
        "(zero demand, revisitable). Return a flattened route list using 0 as the "
        "separator, e.g. [0, 3, 7, 0, 0, 2, 0], starting and ending with 0."
    )


def function_template() -> str:
    return (
        "def solve_cevrptw(distance_matrix, demands, time_windows, service_times,\n"
        "                  vehicle_capacity, battery_capacity, station_indices):\n"
        '    """Return a flattened list of routes (e.g., [0, 1, 5, 0, 0, 2, 0]).\n'
        "\n"
        "    Args:\n"
        "        distance_matrix: (N x N) distance between all nodes.\n"
        "        demands: (N) demand of nodes (0 for depot/stations).\n"
        "        time_windows: (N x 2) [earliest, latest] arrival times.\n"
        "        service_times: (N) duration required at each node.\n"
        "        vehicle_capacity: max load per vehicle.\n"
        "        battery_capacity: max battery energy units.\n"
        "        station_indices: indices of nodes that are charging stations.\n"
        "\n"
        "    Must start/end with depot (0).\n"
        '    """\n'
        "    pass\n"
    )
