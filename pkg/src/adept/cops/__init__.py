"""Problem-family registry: dispatch by problem tag."""

from __future__ import annotations

import random

from ..errors import UnknownProblem
from . import cevrptw, cflp, cvrp, fjsp, mis, mrcpsp
from .base import TIERS, TINY, CopInstance, Verdict

_MODULES = {m.PROBLEM: m for m in (cflp, cvrp, fjsp, mis, cevrptw, mrcpsp)}
PROBLEMS = tuple(sorted(_MODULES))


def get(problem: str):
    try:
        return _MODULES[problem]
    except KeyError:
        raise UnknownProblem(f"unknown problem {problem!r}; known: {PROBLEMS}") from None


def generate_instance(problem: str, tier: str, seed: int) -> CopInstance:
    return get(problem).generate(tier, seed)


def generate_tiny(problem: str, seed: int) -> CopInstance:
    return get(problem).generate_tiny(seed)


def decode_solution(instance: CopInstance, raw):
    return get(instance.problem).decode(instance, raw)


def validate(instance: CopInstance, solution) -> Verdict:
    return get(instance.problem).validate(instance, solution)


def objective(instance: CopInstance, solution) -> float:
    return get(instance.problem).objective(instance, solution)


def oracle_optimum(instance: CopInstance):
    return get(instance.problem).oracle_optimum(instance)


def random_feasible(instance: CopInstance, rng: random.Random):
    return get(instance.problem).random_feasible(instance, rng)


def direction(problem: str) -> str:
    return get(problem).DIRECTION


def entry_name(problem: str) -> str:
    return get(problem).ENTRY_NAME


def task_description(problem: str) -> str:
    return get(problem).task_description()


def function_template(problem: str) -> str:
    return get(problem).function_template()


__all__ = [
    "PROBLEMS",
    "TIERS",
    "TINY",
    "CopInstance",
    "Verdict",
    "decode_solution",
    "direction",
    "entry_name",
    "function_template",
    "generate_instance",
    "generate_tiny",
    "get",
    "objective",
    "oracle_optimum",
    "random_feasible",
    "task_description",
    "validate",
]
