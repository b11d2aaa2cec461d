"""Command-line surface: run, evaluate, oracle.

Exit codes: 0 success, 2 configuration error, 3 backend or guest runner
unavailable.
"""

from __future__ import annotations

import argparse
import json
import logging
import shlex
import sys

from . import cops
from .errors import ConfigError, ProviderError, RunnerUnavailable, TooLarge
from .evaluation import SubprocessRunner, build_fitness_set, default_runner_command, evaluate_program
from .guest_profile import default_profile
from .orchestrator import RunConfig, run
from .program_model import parse_source


def _add_run_parser(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("run", help="evolve solver programs for one problem")
    p.add_argument("--problem", required=True, choices=cops.PROBLEMS)
    p.add_argument("--budget", type=int, default=None, help="total LLM-call budget")
    p.add_argument("--parents", type=int, default=None, help="parent set size per expansion")
    p.add_argument("--backend", choices=("mock", "remote"), default=None)
    p.add_argument("--config", default=None, help="JSON config file mirroring RunConfig fields")
    p.add_argument("--checkpoint", default=None, help="directory for periodic checkpoints")
    p.add_argument("--resume", default=None, help="checkpoint file to resume from")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--fitness-seed", type=int, default=None)
    p.add_argument("--out", default=None, help="report output directory")
    p.add_argument("--scenario", default=None, help="mock scenario manifest file")
    p.add_argument("--fixtures", default=None, help="mock fixture directory")
    p.add_argument("--runner", default=None, help="guest worker command (shell syntax)")


def _build_run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "problem": args.problem,
        "budget": args.budget,
        "parents": args.parents,
        "backend": args.backend,
        "seed": args.seed,
        "fitness_seed": args.fitness_seed,
        "checkpoint_dir": args.checkpoint,
        "out_dir": args.out,
        "mock_scenario_path": args.scenario,
        "mock_fixtures_dir": args.fixtures,
        "runner_command": shlex.split(args.runner) if args.runner else None,
    }
    if args.config:
        return RunConfig.from_file(args.config, **overrides)
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def _cmd_run(args: argparse.Namespace) -> int:
    config = _build_run_config(args)
    result = run(config, resume_path=args.resume)
    best = result.best
    print(json.dumps({
        "calls_used": result.ledger.used,
        "nodes": len(result.tree),
        "best_id": None if best is None else best.id,
        "best_score": None if best is None else best.score,
        "report_files": result.report_files,
    }, indent=2))
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    source = open(args.program).read()
    profile = default_profile()
    program = parse_source(source, profile, entry_hint=cops.entry_name(args.problem))
    fitness = build_fitness_set(args.problem, args.seed, args.time_limit)
    runner = SubprocessRunner(command=shlex.split(args.runner) if args.runner else default_runner_command())
    result = evaluate_program(program, fitness, runner, workers=args.workers)
    print(json.dumps({
        "aggregate": None if result.failed else result.aggregate,
        "failed": result.failed,
        "records": [
            {
                "tier": r.tier,
                "seed": r.instance_seed,
                "status": r.status.value,
                "objective": r.raw_objective,
                "normalized": r.normalized,
                "wall_time_s": round(r.wall_time_s, 3),
                "detail": r.detail,
            }
            for r in result.records
        ],
    }, indent=2))
    return 0 if not result.failed else 1


def _cmd_oracle(args: argparse.Namespace) -> int:
    instance = cops.generate_tiny(args.problem, args.seed)
    try:
        optimum, witness = cops.oracle_optimum(instance)
    except TooLarge as exc:
        raise ConfigError(str(exc)) from exc
    print(json.dumps({
        "instance": instance.to_doc(),
        "optimum": optimum,
        "witness": witness,
        "direction": cops.direction(args.problem),
    }, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adept", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(sub)

    p_eval = sub.add_parser("evaluate", help="score one program file on a fitness set")
    p_eval.add_argument("--program", required=True)
    p_eval.add_argument("--problem", required=True, choices=cops.PROBLEMS)
    p_eval.add_argument("--seed", type=int, default=0, help="fitness set seed")
    p_eval.add_argument("--time-limit", type=float, default=120.0)
    p_eval.add_argument("--workers", type=int, default=4)
    p_eval.add_argument("--runner", default=None)

    p_oracle = sub.add_parser("oracle", help="exact optimum of a tiny instance")
    p_oracle.add_argument("--problem", required=True, choices=cops.PROBLEMS)
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.add_argument("--size-bounded", action="store_true", default=True,
                          help="restrict to oracle-sized instances (always on)")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RunnerUnavailable, ProviderError) as exc:
        print(f"backend/runner unavailable: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
