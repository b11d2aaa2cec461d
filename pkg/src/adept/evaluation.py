"""Sandboxed evaluation of candidate programs on multi-scale fitness sets.

Candidates run in single-shot guest worker processes speaking a one-document
JSON protocol over stdin/stdout.  The guest is untrusted: solutions are
re-validated and objectives recomputed harness-side, and the wall-clock limit
is enforced externally with a kill regardless of guest cooperation.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import shlex
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import cops
from .cops import CopInstance
from .errors import MalformedSolution, RunnerUnavailable
from .program_model import StructuredProgram, render_source
from .scores import FAILED_SCORE, is_failed, normalize_score

log = logging.getLogger(__name__)

ENV_RUNNER = "ADEPT_GUEST_RUNNER"
INSTANCES_PER_TIER = 4
KILL_GRACE_S = 1.0


class InstanceStatus(enum.Enum):
    OK = "ok"
    GUEST_ERROR = "guest_error"
    TIMEOUT = "timeout"
    INFEASIBLE = "infeasible"
    MALFORMED_OUTPUT = "malformed_output"


@dataclass(frozen=True)
class InstanceRecord:
    instance_seed: int
    tier: str
    status: InstanceStatus
    raw_objective: float | None = None
    normalized: float | None = None
    wall_time_s: float = 0.0
    detail: str = ""


@dataclass(frozen=True)
class EvalResult:
    records: tuple[InstanceRecord, ...]
    aggregate: float
    total_wall_time_s: float

    @property
    def failed(self) -> bool:
        return is_failed(self.aggregate)


@dataclass(frozen=True)
class FitnessSet:
    problem: str
    instances: tuple[CopInstance, ...]
    total_time_limit_s: float = 120.0

    def __post_init__(self):
        per_tier: dict[str, int] = {}
        for inst in self.instances:
            per_tier[inst.tier] = per_tier.get(inst.tier, 0) + 1
        if any(count != INSTANCES_PER_TIER for count in per_tier.values()) or len(per_tier) != 4:
            raise ValueError("fitness set needs exactly 4 instances per tier across 4 tiers")

    @property
    def per_instance_limit_s(self) -> float:
        return self.total_time_limit_s / len(self.instances)

    @property
    def smallest(self) -> CopInstance:
        return self.instances[0]


def build_fitness_set(problem: str, seed: int, total_time_limit_s: float = 120.0) -> FitnessSet:
    instances = []
    for t_idx, tier in enumerate(cops.TIERS):
        for i in range(INSTANCES_PER_TIER):
            instances.append(cops.generate_instance(problem, tier, seed * 1000 + t_idx * 10 + i))
    return FitnessSet(problem, tuple(instances), total_time_limit_s)


def aggregate_scores(
    records: list[InstanceRecord],
    lenient: bool = False,
    failure_penalty: float = 1.0,
) -> float:
    """Arithmetic mean of normalized scores; any non-Ok instance fails the
    whole candidate.

    The lenient mode (off by default, and off throughout the search) averages
    the surviving instances instead and subtracts ``failure_penalty`` per
    failed one; a candidate with no surviving instance still fails outright.
    """
    if not records:
        return FAILED_SCORE
    bad = [r for r in records if r.status is not InstanceStatus.OK]
    if bad and not lenient:
        return FAILED_SCORE
    ok = [r for r in records if r.status is InstanceStatus.OK]
    if not ok:
        return FAILED_SCORE
    return sum(r.normalized for r in ok) / len(ok) - failure_penalty * len(bad)


def default_runner_command() -> list[str]:
    override = os.environ.get(ENV_RUNNER)
    if override:
        return shlex.split(override)
    return [sys.executable, "-m", "adept_guest_runner"]


@dataclass
class SubprocessRunner:
    """Spawns one fresh worker process per request (guest isolation)."""

    command: list[str] = field(default_factory=default_runner_command)

    def run(self, request: dict, time_limit_s: float) -> dict:
        """One protocol round trip.  Returns the response document, or a
        synthetic one when the worker had to be killed or spoke garbage."""
        payload = json.dumps(request)
        try:
            proc = subprocess.run(
                self.command,
                input=payload,
                capture_output=True,
                text=True,
                timeout=time_limit_s + KILL_GRACE_S,
            )
        except FileNotFoundError as exc:
            raise RunnerUnavailable(f"cannot spawn guest worker {self.command}: {exc}") from exc
        except subprocess.TimeoutExpired:
            return {"status": "timeout", "solution": None, "stderr_tail": "killed by harness", "wall_time_s": time_limit_s}
        if not proc.stdout.strip():
            tail = proc.stderr[-2048:] if proc.stderr else f"exit code {proc.returncode}"
            return {"status": "malformed", "solution": None, "stderr_tail": tail, "wall_time_s": 0.0}
        try:
            return json.loads(proc.stdout)
        except json.JSONDecodeError:
            return {"status": "malformed", "solution": None, "stderr_tail": proc.stdout[-2048:], "wall_time_s": 0.0}


def _score_instance(
    source: str,
    entry: str,
    instance: CopInstance,
    runner: SubprocessRunner,
    limit_s: float,
    deadline: float | None,
) -> InstanceRecord:
    if deadline is not None and time.monotonic() > deadline:
        return InstanceRecord(instance.seed, instance.tier, InstanceStatus.TIMEOUT, detail="total budget exhausted")
    request = {
        "source": source,
        "entry": entry,
        "problem": instance.problem,
        "instance": instance.to_doc(),
        "time_limit_s": limit_s,
    }
    start = time.monotonic()
    response = runner.run(request, limit_s)
    wall = time.monotonic() - start
    status = response.get("status")
    if status == "timeout":
        return InstanceRecord(instance.seed, instance.tier, InstanceStatus.TIMEOUT, wall_time_s=wall)
    if status == "error":
        return InstanceRecord(
            instance.seed, instance.tier, InstanceStatus.GUEST_ERROR,
            wall_time_s=wall, detail=str(response.get("stderr_tail", ""))[-500:],
        )
    if status != "ok" or "solution" not in response:
        return InstanceRecord(
            instance.seed, instance.tier, InstanceStatus.MALFORMED_OUTPUT,
            wall_time_s=wall, detail=str(response.get("stderr_tail", ""))[-500:],
        )
    try:
        solution = cops.decode_solution(instance, response["solution"])
    except MalformedSolution as exc:
        return InstanceRecord(instance.seed, instance.tier, InstanceStatus.MALFORMED_OUTPUT, wall_time_s=wall, detail=str(exc))
    verdict = cops.validate(instance, solution)
    if not verdict:
        return InstanceRecord(instance.seed, instance.tier, InstanceStatus.INFEASIBLE, wall_time_s=wall, detail=verdict.reason)
    raw = cops.objective(instance, solution)
    normalized = normalize_score(raw, cops.direction(instance.problem), instance.sigma)
    return InstanceRecord(instance.seed, instance.tier, InstanceStatus.OK, raw, normalized, wall)


def evaluate_program(
    program: StructuredProgram,
    fitness: FitnessSet,
    runner: SubprocessRunner,
    workers: int = 4,
    lenient: bool = False,
) -> EvalResult:
    """Run the candidate on every instance, re-validate, normalize, aggregate."""
    source = render_source(program)
    limit = fitness.per_instance_limit_s
    started = time.monotonic()
    deadline = started + fitness.total_time_limit_s

    def job(instance: CopInstance) -> InstanceRecord:
        return _score_instance(source, program.entry, instance, runner, limit, deadline)

    if workers <= 1:
        records = [job(inst) for inst in fitness.instances]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(job, fitness.instances))
    return EvalResult(tuple(records), aggregate_scores(records, lenient=lenient), time.monotonic() - started)


def contract_smoke_check(
    program: StructuredProgram,
    instance: CopInstance,
    runner: SubprocessRunner,
    time_limit_s: float = 2.0,
) -> bool:
    """One cheap guest execution on the smallest instance; a crash, timeout,
    malformed or infeasible answer fails the candidate before full evaluation."""
    record = _score_instance(render_source(program), program.entry, instance, runner, time_limit_s, None)
    if record.status is not InstanceStatus.OK:
        log.info("smoke check failed (%s): %s", record.status.value, record.detail)
        return False
    return True
