"""Capacitated Facility Location (single-source): generation with packing
guarantee, validation, exact subset/assignment oracle."""

from __future__ import annotations

import itertools
import math
import random

from ..errors import TooLarge
from .base import FEASIBLE, CopInstance, Verdict, as_int_list, infeasible, require, rng_for

PROBLEM = "cflp"
DIRECTION = "min"
ENTRY_NAME = "solve_cflp"
ORACLE_MAX_FACILITIES = 5
ORACLE_MAX_CUSTOMERS = 7

TIER_SIZE = {"small": 25, "medium": 50, "large": 100, "extra_large": 200}


def _ffd_fits(capacities: list[int], demands: list[int]) -> bool:
    residual = sorted(capacities, reverse=True)
    for d in sorted(demands, reverse=True):
        residual.sort(reverse=True)
        if residual[0] < d:
            return False
        residual[0] -= d
    return True


def _build(m: int, n: int, tier: str, seed: int, rng: random.Random) -> CopInstance:
    for _ in range(100):
        capacities = [rng.randint(5, 100) for _ in range(m)]
        demands = [rng.randint(5, 20) for _ in range(n)]
        if _ffd_fits(capacities, demands):
            break
    else:
        raise RuntimeError("could not draw a packable CFLP instance")
    fac_pts = [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(m)]
    cust_pts = [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(n)]
    costs = [[math.dist(fac_pts[i], cust_pts[j]) for j in range(n)] for i in range(m)]
    fixed = [rng.randint(100, 500) for _ in range(m)]
    payload = {
        "num_facilities": m,
        "num_customers": n,
        "facility_capacities": capacities,
        "customer_demands": demands,
        "assignment_costs": costs,
        "fixed_costs": fixed,
    }
    return CopInstance(PROBLEM, tier, seed, sigma=n, payload=payload)


def generate(tier: str, seed: int) -> CopInstance:
    size = TIER_SIZE[tier]
    return _build(size, size, tier, seed, rng_for(PROBLEM, tier, seed))


def generate_tiny(seed: int) -> CopInstance:
    rng = rng_for(PROBLEM, "tiny", seed)
    m = rng.randint(3, 4)
    n = rng.randint(4, 6)
    return _build(m, n, "tiny", seed, rng)


def decode(instance: CopInstance, raw) -> list[int]:
    n = instance.payload["num_customers"]
    m = instance.payload["num_facilities"]
    assignment = as_int_list(raw, "cflp solution must be a list of facility indices")
    require(len(assignment) == n, f"expected one facility per customer ({n})")
    require(all(0 <= f < m for f in assignment), "facility index out of range")
    return assignment


def validate(instance: CopInstance, assignment: list[int]) -> Verdict:
    capacities = instance.payload["facility_capacities"]
    demands = instance.payload["customer_demands"]
    load = [0] * instance.payload["num_facilities"]
    for customer, facility in enumerate(assignment):
        load[facility] += demands[customer]
    for facility, used in enumerate(load):
        if used > capacities[facility]:
            return infeasible(
                "capacity", f"facility {facility} load {used} exceeds {capacities[facility]}"
            )
    return FEASIBLE


def objective(instance: CopInstance, assignment: list[int]) -> float:
    costs = instance.payload["assignment_costs"]
    fixed = instance.payload["fixed_costs"]
    total = sum(costs[f][j] for j, f in enumerate(assignment))
    total += sum(fixed[f] for f in set(assignment))
    return total


def oracle_optimum(instance: CopInstance) -> tuple[float, list[int]]:
    """Exact optimum: enumerate open-facility subsets, branch-and-bound the
    single-source assignment inside each subset."""
    m = instance.payload["num_facilities"]
    n = instance.payload["num_customers"]
    if m > ORACLE_MAX_FACILITIES or n > ORACLE_MAX_CUSTOMERS:
        raise TooLarge(f"oracle bounds are {ORACLE_MAX_FACILITIES}x{ORACLE_MAX_CUSTOMERS}")
    capacities = instance.payload["facility_capacities"]
    demands = instance.payload["customer_demands"]
    costs = instance.payload["assignment_costs"]
    fixed = instance.payload["fixed_costs"]
    order = sorted(range(n), key=lambda j: -demands[j])

    best_cost = math.inf
    best_assignment: list[int] | None = None
    for r in range(1, m + 1):
        for open_set in itertools.combinations(range(m), r):
            if sum(capacities[i] for i in open_set) < sum(demands):
                continue
            base = sum(fixed[i] for i in open_set)
            if base >= best_cost:
                continue
            lower_tail = [0.0] * (n + 1)
            for k in range(n - 1, -1, -1):
                j = order[k]
                lower_tail[k] = lower_tail[k + 1] + min(costs[i][j] for i in open_set)

            residual = {i: capacities[i] for i in open_set}
            assignment = [0] * n

            def assign(k: int, acc: float) -> None:
                nonlocal best_cost, best_assignment
                if acc + lower_tail[k] >= best_cost:
                    return
                if k == n:
                    best_cost = acc
                    best_assignment = assignment.copy()
                    return
                j = order[k]
                for i in sorted(open_set, key=lambda i: costs[i][j]):
                    if residual[i] >= demands[j]:
                        residual[i] -= demands[j]
                        assignment[j] = i
                        assign(k + 1, acc + costs[i][j])
                        residual[i] += demands[j]

            assign(0, base)
    return best_cost, best_assignment


def random_feasible(instance: CopInstance, rng: random.Random) -> list[int]:
    capacities = instance.payload["facility_capacities"]
    demands = instance.payload["customer_demands"]
    n = instance.payload["num_customers"]
    m = instance.payload["num_facilities"]
    for _ in range(100):
        residual = list(capacities)
        assignment = [0] * n
        order = list(range(n))
        rng.shuffle(order)
        ok = True
        for j in order:
            options = [i for i in range(m) if residual[i] >= demands[j]]
            if not options:
                ok = False
                break
            i = rng.choice(options)
            assignment[j] = i
            residual[i] -= demands[j]
        if ok:
            return assignment
    # deterministic fallback: first-fit decreasing
    residual = list(capacities)
    assignment = [0] * n
    for j in sorted(range(n), key=lambda j: -demands[j]):
        i = max(range(m), key=lambda i: residual[i])
        assignment[j] = i
        residual[i] -= demands[j]
    return assignment


def task_description() -> str:
    return (
        "Capacitated Facility Location (single source): choose which facilities to open "
        "and assign each customer to exactly one open facility without exceeding facility "
        "capacities. Minimize total fixed opening costs plus assignment costs.\n"
        "Implement `solve_cflp(facility_capacities, customer_demands, assignment_costs, "
        "fixed_costs)` where facility_capacities (size M) and customer_demands (size N) "
        "are integer lists, assignment_costs is an M x N matrix with [i][j] the cost of "
        "serving customer j from facility i, and fixed_costs (size M) the opening costs. "
        "Return a list of N facility indices, one per customer; a facility is billed as "
        "open when any customer is assigned to it."
    )


def function_template() -> str:
    return (
        "def solve_cflp(facility_capacities, customer_demands, assignment_costs, fixed_costs):\n"
        '    """Return a list assigning each customer to one facility index.\n'
        "\n"
        "    Args:\n"
        "        facility_capacities: max capacity for each facility (size M).\n"
        "        customer_demands: demand values for each customer (size N).\n"
        "        assignment_costs: M x N matrix, [i][j] = cost to serve customer j from facility i.\n"
        "        fixed_costs: setup cost for opening each facility.\n"
        '    """\n'
        "    pass\n"
    )
