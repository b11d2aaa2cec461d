"""Shared instance/solution plumbing for the six problem families."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any

TIERS = ("small", "medium", "large", "extra_large")
TINY = "tiny"


@dataclass(frozen=True)
class CopInstance:
    problem: str
    tier: str
    seed: int
    sigma: int
    payload: dict[str, Any]

    def to_doc(self) -> dict:
        return {
            "problem": self.problem,
            "tier": self.tier,
            "seed": self.seed,
            "sigma": self.sigma,
            "payload": self.payload,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "CopInstance":
        return cls(doc["problem"], doc["tier"], doc["seed"], doc["sigma"], doc["payload"])


@dataclass(frozen=True)
class Verdict:
    feasible: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.feasible


FEASIBLE = Verdict(True)


def infeasible(family: str, detail: str = "") -> Verdict:
    return Verdict(False, f"{family}: {detail}" if detail else family)


def rng_for(problem: str, tier: str, seed: int) -> random.Random:
    return random.Random(f"{problem}:{tier}:{seed}")


def distance_matrix(coords: list[list[float]]) -> list[list[float]]:
    n = len(coords)
    return [[math.dist(coords[i], coords[j]) for j in range(n)] for i in range(n)]


def require(condition: bool, message: str) -> None:
    from ..errors import MalformedSolution

    if not condition:
        raise MalformedSolution(message)


def as_int_list(value, message: str) -> list[int]:
    require(isinstance(value, list), message)
    out = []
    for item in value:
        require(isinstance(item, int) and not isinstance(item, bool), message)
        out.append(item)
    return out
