"""Single-shot guest worker.

Reads one JSON request from stdin, executes the candidate source in an
isolated namespace under a self-enforced wall-clock alarm, and writes exactly
one JSON response to stdout.  All guest failures are reported in-band; a
nonzero exit happens only when the request itself is unreadable.

Request:  {"source": str, "entry": str, "problem": str,
           "instance": {..., "payload": {...}}, "time_limit_s": float}
Response: {"status": "ok"|"error"|"timeout", "solution": ...,
           "stderr_tail": str, "wall_time_s": float}

Positional argument order passed to the entry function, per problem:
  mis      adjacency_matrix, n_nodes
  cvrp     distance_matrix, demands, vehicle_capacity
  cflp     facility_capacities, customer_demands, assignment_costs, fixed_costs
  fjsp     jobs, num_machines
  cevrptw  distance_matrix, demands, time_windows, service_times,
           vehicle_capacity, battery_capacity, station_indices
  mrcpsp   modes, precedence, renewable_capacities, nonrenewable_capacities
"""

from __future__ import annotations

import contextlib
import io
import json
import math
import signal
import sys
import time
import traceback

STDERR_TAIL_BYTES = 2048


class _TimeLimit(Exception):
    pass


def _alarm_handler(signum, frame):
    raise _TimeLimit()


def _distance_matrix(coords):
    n = len(coords)
    return [[math.dist(coords[i], coords[j]) for j in range(n)] for i in range(n)]


def _adjacency_matrix(payload):
    n = payload["num_vertices"]
    matrix = [[0] * n for _ in range(n)]
    for u, v in payload["edges"]:
        matrix[u][v] = 1
        matrix[v][u] = 1
    return matrix


def build_args(problem: str, payload: dict) -> list:
    """Adapt an instance payload to the entry function's positional args."""
    if problem == "mis":
        return [_adjacency_matrix(payload), payload["num_vertices"]]
    if problem == "cvrp":
        return [
            _distance_matrix(payload["coordinates"]),
            payload["demands"],
            payload["vehicle_capacity"],
        ]
    if problem == "cflp":
        return [
            payload["facility_capacities"],
            payload["customer_demands"],
            payload["assignment_costs"],
            payload["fixed_costs"],
        ]
    if problem == "fjsp":
        return [payload["jobs"], payload["num_machines"]]
    if problem == "cevrptw":
        return [
            payload["distance_matrix"],
            payload["demands"],
            payload["time_windows"],
            payload["service_times"],
            payload["vehicle_capacity"],
            payload["battery_capacity"],
            payload["station_indices"],
        ]
    if problem == "mrcpsp":
        return [
            payload["modes"],
            payload["precedence"],
            payload["renewable_capacities"],
            payload["nonrenewable_capacities"],
        ]
    raise KeyError(f"unknown problem {problem!r}")


def _jsonable(value):
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "item"):
        return value.item()
    if isinstance(value, (set, frozenset, tuple)):
        return sorted(value) if isinstance(value, (set, frozenset)) else list(value)
    raise TypeError(f"unserializable type {type(value).__name__}")


def execute(request: dict) -> dict:
    start = time.monotonic()
    limit = float(request.get("time_limit_s", 0) or 0)
    response = {"status": "error", "solution": None, "stderr_tail": "", "wall_time_s": 0.0}
    sink = io.StringIO()
    old_handler = None
    try:
        if limit > 0:
            old_handler = signal.signal(signal.SIGALRM, _alarm_handler)
            signal.setitimer(signal.ITIMER_REAL, limit)
        namespace: dict = {"__name__": "candidate_solver"}
        with contextlib.redirect_stdout(sink):
            exec(compile(request["source"], "<candidate>", "exec"), namespace)
            entry = namespace.get(request["entry"])
            if not callable(entry):
                raise NameError(f"entry function {request['entry']!r} not defined")
            args = build_args(request["problem"], request["instance"]["payload"])
            solution = entry(*args)
        # round-trip through JSON now so numpy containers fail here, in-band
        response["solution"] = json.loads(json.dumps(solution, default=_jsonable))
        response["status"] = "ok"
    except _TimeLimit:
        response["status"] = "timeout"
        response["stderr_tail"] = f"self-enforced time limit of {limit}s hit"
    except BaseException:
        response["status"] = "error"
        response["stderr_tail"] = traceback.format_exc()[-STDERR_TAIL_BYTES:]
    finally:
        if limit > 0:
            signal.setitimer(signal.ITIMER_REAL, 0)
            if old_handler is not None:
                signal.signal(signal.SIGALRM, old_handler)
    response["wall_time_s"] = time.monotonic() - start
    return response


def main() -> int:
    raw = sys.stdin.read()
    try:
        request = json.loads(raw)
        for field in ("source", "entry", "problem", "instance"):
            if field not in request:
                raise KeyError(field)
    except (json.JSONDecodeError, KeyError) as exc:
        print(f"protocol failure: unreadable request ({exc})", file=sys.stderr)
        return 2
    response = execute(request)
    sys.stdout.write(json.dumps(response))
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
