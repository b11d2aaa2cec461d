"""Maximum Independent Set: Erdos-Renyi generation, validation, exact oracle."""

from __future__ import annotations

import random

from ..errors import TooLarge
from .base import FEASIBLE, CopInstance, Verdict, as_int_list, infeasible, require, rng_for

PROBLEM = "mis"
DIRECTION = "max"
ENTRY_NAME = "solve_mis"
ORACLE_MAX_VERTICES = 20

TIER_VERTICES = {"small": 50, "medium": 100, "large": 250, "extra_large": 500}


def _build(n: int, tier: str, seed: int, rng: random.Random) -> CopInstance:
    p = rng.uniform(0.1, 0.3)
    edges = [[u, v] for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    payload = {"num_vertices": n, "edges": edges}
    return CopInstance(PROBLEM, tier, seed, sigma=n, payload=payload)


def generate(tier: str, seed: int) -> CopInstance:
    n = TIER_VERTICES[tier]
    return _build(n, tier, seed, rng_for(PROBLEM, tier, seed))


def generate_tiny(seed: int) -> CopInstance:
    rng = rng_for(PROBLEM, "tiny", seed)
    return _build(rng.randint(8, 14), "tiny", seed, rng)


def decode(instance: CopInstance, raw) -> list[int]:
    n = instance.payload["num_vertices"]
    vertices = as_int_list(raw, "mis solution must be a list of vertex indices")
    require(all(0 <= v < n for v in vertices), "vertex index out of range")
    require(len(set(vertices)) == len(vertices), "duplicate vertices in solution")
    return sorted(vertices)


def validate(instance: CopInstance, solution: list[int]) -> Verdict:
    selected = set(solution)
    for u, v in instance.payload["edges"]:
        if u in selected and v in selected:
            return infeasible("independence", f"vertices {u} and {v} are adjacent")
    return FEASIBLE


def objective(instance: CopInstance, solution: list[int]) -> float:
    return float(len(solution))


def _adjacency_masks(instance: CopInstance) -> list[int]:
    n = instance.payload["num_vertices"]
    adj = [0] * n
    for u, v in instance.payload["edges"]:
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    return adj


def oracle_optimum(instance: CopInstance) -> tuple[float, list[int]]:
    """Exact maximum via branch-and-bound over vertex bitmasks."""
    n = instance.payload["num_vertices"]
    if n > ORACLE_MAX_VERTICES:
        raise TooLarge(f"oracle bound is {ORACLE_MAX_VERTICES} vertices, got {n}")
    adj = _adjacency_masks(instance)

    best_mask = 0
    used = 0
    for v in sorted(range(n), key=lambda v: adj[v].bit_count()):
        if not used & (1 << v):
            best_mask |= 1 << v
            used |= adj[v] | (1 << v)
    best_size = best_mask.bit_count()

    def dfs(candidates: int, chosen: int, size: int) -> None:
        nonlocal best_mask, best_size
        if size + candidates.bit_count() <= best_size:
            return
        if candidates == 0:
            best_mask, best_size = chosen, size
            return
        v = (candidates & -candidates).bit_length() - 1
        dfs(candidates & ~(adj[v] | (1 << v)), chosen | (1 << v), size + 1)
        dfs(candidates & ~(1 << v), chosen, size)

    dfs((1 << n) - 1, 0, 0)
    witness = [v for v in range(n) if best_mask >> v & 1]
    return float(best_size), witness


def random_feasible(instance: CopInstance, rng: random.Random) -> list[int]:
    n = instance.payload["num_vertices"]
    adj = [set() for _ in range(n)]
    for u, v in instance.payload["edges"]:
        adj[u].add(v)
        adj[v].add(u)
    order = list(range(n))
    rng.shuffle(order)
    chosen: set[int] = set()
    for v in order:
        if not adj[v] & chosen:
            chosen.add(v)
    return sorted(chosen)


def task_description() -> str:
    return (
        "Maximum Independent Set: given an undirected graph, select the largest "
        "possible set of vertices such that no two selected vertices share an edge.\n"
        "Implement `solve_mis(adjacency_matrix, n_nodes)` where adjacency_matrix is an "
        "n_nodes x n_nodes 0/1 list-of-lists and n_nodes the vertex count. Return a list "
        "of selected vertex indices (0-based). The returned set must be independent; "
        "larger sets score higher."
    )


def function_template() -> str:
    return (
        "def solve_mis(adjacency_matrix, n_nodes):\n"
        '    """Return a list of vertex indices forming an independent set.\n'
        "\n"
        "    Args:\n"
        "        adjacency_matrix: n_nodes x n_nodes 0/1 list of lists.\n"
        "        n_nodes: number of vertices.\n"
        '    """\n'
        "    pass\n"
    )
