"""Capacitated Vehicle Routing: unit-square instances, route validation,
exact partition/permutation oracle for tiny sizes."""

from __future__ import annotations

import itertools
import math
import random

from ..errors import MalformedSolution, TooLarge
from .base import FEASIBLE, CopInstance, Verdict, infeasible, require, rng_for

PROBLEM = "cvrp"
DIRECTION = "min"
ENTRY_NAME = "solve_cvrp"
ORACLE_MAX_CUSTOMERS = 7

TIER_CUSTOMERS = {"small": 25, "medium": 50, "large": 100, "extra_large": 200}

Route = list[int]


def _build(n: int, tier: str, seed: int, rng: random.Random, q_range=(20, 40), d_range=(1, 10)) -> CopInstance:
    coords = [[rng.random(), rng.random()] for _ in range(n + 1)]
    demands = [0] + [rng.randint(*d_range) for _ in range(n)]
    capacity = rng.randint(*q_range)
    payload = {
        "num_customers": n,
        "coordinates": coords,
        "demands": demands,
        "vehicle_capacity": capacity,
    }
    return CopInstance(PROBLEM, tier, seed, sigma=n, payload=payload)


def generate(tier: str, seed: int) -> CopInstance:
    return _build(TIER_CUSTOMERS[tier], tier, seed, rng_for(PROBLEM, tier, seed))


def generate_tiny(seed: int) -> CopInstance:
    rng = rng_for(PROBLEM, "tiny", seed)
    # small capacity so the oracle actually splits routes
    return _build(rng.randint(4, 6), "tiny", seed, rng, q_range=(8, 14), d_range=(1, 6))


def dist(instance: CopInstance, i: int, j: int) -> float:
    coords = instance.payload["coordinates"]
    return math.dist(coords[i], coords[j])


def decode(instance: CopInstance, raw) -> list[Route]:
    """Accept a list of routes (customer indices, optional flanking depot 0s)
    or one flat list using 0 as the route separator."""
    require(isinstance(raw, list), "cvrp solution must be a list")
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
            require(
                all(isinstance(v, int) and not isinstance(v, bool) for v in route),
                "route entries must be integers",
            )
            core = [v for v in route if v != 0]
            inner = route[1:-1] if len(route) >= 2 else route
            require(0 not in inner, "depot appears inside a route")
            if core:
                routes.append(core)
    else:
        raise MalformedSolution("cvrp solution mixes integers and lists")
    n = instance.payload["num_customers"]
    for route in routes:
        require(all(1 <= c <= n for c in route), "customer index out of range")
    return routes


def validate(instance: CopInstance, routes: list[Route]) -> Verdict:
    n = instance.payload["num_customers"]
    demands = instance.payload["demands"]
    capacity = instance.payload["vehicle_capacity"]
    seen: list[int] = [c for route in routes for c in route]
    if len(set(seen)) != len(seen):
        return infeasible("visit", "a customer is visited more than once")
    if set(seen) != set(range(1, n + 1)):
        missing = sorted(set(range(1, n + 1)) - set(seen))
        return infeasible("visit", f"customers not served: {missing[:5]}")
    for route in routes:
        load = sum(demands[c] for c in route)
        if load > capacity:
            return infeasible("capacity", f"route load {load} exceeds {capacity}")
    return FEASIBLE


def route_cost(instance: CopInstance, route: Route) -> float:
    total = dist(instance, 0, route[0])
    for a, b in zip(route, route[1:]):
        total += dist(instance, a, b)
    return total + dist(instance, route[-1], 0)


def objective(instance: CopInstance, routes: list[Route]) -> float:
    return sum(route_cost(instance, r) for r in routes)


def _best_route_orders(instance: CopInstance, customers: tuple[int, ...]) -> tuple[float, Route]:
    best_cost, best_order = math.inf, None
    for perm in itertools.permutations(customers):
        cost = route_cost(instance, list(perm))
        if cost < best_cost:
            best_cost, best_order = cost, list(perm)
    return best_cost, best_order


def oracle_optimum(instance: CopInstance) -> tuple[float, list[Route]]:
    """Exact optimum by enumerating customer partitions (capacity-feasible)
    with an optimal visiting order per route."""
    n = instance.payload["num_customers"]
    if n > ORACLE_MAX_CUSTOMERS:
        raise TooLarge(f"oracle bound is {ORACLE_MAX_CUSTOMERS} customers, got {n}")
    demands = instance.payload["demands"]
    capacity = instance.payload["vehicle_capacity"]
    customers = list(range(1, n + 1))

    route_table: dict[tuple[int, ...], tuple[float, Route]] = {}
    for r in range(1, n + 1):
        for subset in itertools.combinations(customers, r):
            if sum(demands[c] for c in subset) <= capacity:
                route_table[subset] = _best_route_orders(instance, subset)

    best = [math.inf, None]

    def partitions(remaining: frozenset[int], acc_cost: float, acc: list[tuple[int, ...]]):
        if acc_cost >= best[0]:
            return
        if not remaining:
            best[0] = acc_cost
            best[1] = [list(route_table[s][1]) for s in acc]
            return
        first = min(remaining)
        rest = sorted(remaining - {first})
        for r in range(len(rest) + 1):
            for extra in itertools.combinations(rest, r):
                subset = tuple(sorted((first,) + extra))
                entry = route_table.get(subset)
                if entry is None:
                    continue
                partitions(remaining - set(subset), acc_cost + entry[0], acc + [subset])

    partitions(frozenset(customers), 0.0, [])
    return best[0], best[1]


def random_feasible(instance: CopInstance, rng: random.Random) -> list[Route]:
    demands = instance.payload["demands"]
    capacity = instance.payload["vehicle_capacity"]
    order = list(range(1, instance.payload["num_customers"] + 1))
    rng.shuffle(order)
    routes: list[Route] = []
    current: Route = []
    load = 0
    for c in order:
        if load + demands[c] > capacity:
            routes.append(current)
            current, load = [], 0
        current.append(c)
        load += demands[c]
    if current:
        routes.append(current)
    return routes


def task_description() -> str:
    return (
        "Capacitated Vehicle Routing: a single depot (node 0) and N customers with "
        "integer demands must be served by identical vehicles of fixed capacity, each "
        "route starting and ending at the depot, every customer visited exactly once. "
        "Minimize the total Euclidean travel distance.\n"
        "Implement `solve_cvrp(distance_matrix, demands, vehicle_capacity)` where "
        "distance_matrix is an (N+1)x(N+1) list of lists (index 0 is the depot), demands "
        "is a list of N+1 integers (demands[0] == 0) and vehicle_capacity an integer. "
        "Return a list of routes, each route a list of customer indices (1-based, depot "
        "omitted), jointly covering every customer exactly once with route demand within "
        "capacity."
    )


def function_template() -> str:
    return (
        "def solve_cvrp(distance_matrix, demands, vehicle_capacity):\n"
        '    """Return routes as a list of lists of customer indices (no depot).\n'
        "\n"
        "    Args:\n"
        "        distance_matrix: (N+1)x(N+1) symmetric distances, row 0 is the depot.\n"
        "        demands: list of N+1 integers, demands[0] == 0.\n"
        "        vehicle_capacity: max total demand per route.\n"
        '    """\n'
        "    pass\n"
    )
