"""Headless entry point.

Subcommands: run a scenario to a persisted run directory, replay a run
directory from its journal and verify byte-equality, serve the live control
API, and validate fault-mitigation chart files.

Exit codes are a stable contract: 0 success, 1 validation error, 2 runtime
invariant violation, 3 replay divergence. Flags beat FARMSIM_* environment
variables, which beat built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from farmsim import dsl
from farmsim.config import ScenarioError, load_scenario
from farmsim.runs import replay_run_dir, run_scenario
from farmsim.session import InvariantViolation

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INVARIANT = 2
EXIT_DIVERGENCE = 3

ENV_DEFAULTS = {
    "scenario": "FARMSIM_SCENARIO",
    "seed": "FARMSIM_SEED",
    "out": "FARMSIM_OUT",
    "period": "FARMSIM_PERIOD",
    "listen": "FARMSIM_LISTEN",
}


def _env(name: str, fallback=None):
    return os.environ.get(ENV_DEFAULTS[name], fallback)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="farmsim",
        description="Deterministic trigger-farm simulator with fault-adaptive agents.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    run = sub.add_parser("run", help="execute a scenario headless and persist the run")
    run.add_argument("--scenario", default=_env("scenario"), help="scenario JSON path")
    run.add_argument("--seed", type=int, default=_env("seed"), help="override the scenario seed")
    run.add_argument("--out", default=_env("out", "runs"), help="run directory root")
    run.add_argument(
        "--period", type=float, default=_env("period"), help="override the telemetry period"
    )

    replay = sub.add_parser("replay", help="re-execute a run from its journal and compare")
    replay.add_argument("run_dir", help="run directory written by `farmsim run`")

    serve = sub.add_parser("serve", help="serve the live control API and telemetry stream")
    serve.add_argument("--scenario", default=_env("scenario"), help="scenario JSON path")
    serve.add_argument("--seed", type=int, default=_env("seed"), help="override the scenario seed")
    serve.add_argument(
        "--listen", default=_env("listen", "127.0.0.1:8000"), help="host:port to bind"
    )
    serve.add_argument("--speed", type=float, default=1.0, help="virtual seconds per wall second")
    serve.add_argument(
        "--duration", type=float, default=None, help="override the scenario duration"
    )

    validate = sub.add_parser("validate-dsl", help="parse and validate a statechart file")
    validate.add_argument("spec_path", help="fault-mitigation chart file")

    return parser


def _load(args) -> tuple:
    if not args.scenario:
        print("error: no scenario given (use --scenario or FARMSIM_SCENARIO)", file=sys.stderr)
        return None, EXIT_VALIDATION
    try:
        scenario = load_scenario(args.scenario)
    except (ScenarioError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return None, EXIT_VALIDATION
    if args.seed is not None:
        scenario = scenario.with_overrides(seed=int(args.seed))
    if getattr(args, "period", None) is not None:
        scenario = scenario.with_overrides(telemetry_period=float(args.period))
    if getattr(args, "duration", None) is not None:
        scenario = scenario.with_overrides(duration=float(args.duration))
    return scenario, EXIT_OK


def cmd_run(args) -> int:
    scenario, code = _load(args)
    if scenario is None:
        return code
    try:
        result, run_dir = run_scenario(scenario, args.out)
    except InvariantViolation as err:
        print(f"invariant violation: {err}", file=sys.stderr)
        return EXIT_INVARIANT
    summary = result.summary()
    print(
        f"scenario {summary['scenario']} seed {summary['seed']}: "
        f"efficiency={summary['efficiency']:.6f} missing={summary['missing_events']} "
        f"generated={summary['generated']} processed={summary['processed']}"
    )
    mitigation = summary["mitigation"]
    print(
        "mitigation: "
        + " ".join(f"{name}={count}" for name, count in mitigation.items())
    )
    print(f"run dir: {run_dir}")
    return EXIT_OK


def cmd_replay(args) -> int:
    run_dir = Path(args.run_dir)
    if not (run_dir / "journal.ndjson").exists():
        print(f"error: {run_dir} is not a complete run directory", file=sys.stderr)
        return EXIT_VALIDATION
    report = replay_run_dir(run_dir)
    print(report.describe())
    return EXIT_OK if report.identical else EXIT_DIVERGENCE


def cmd_serve(args) -> int:
    scenario, code = _load(args)
    if scenario is None:
        return code
    import uvicorn

    from farmsim.service import create_app

    host, _, port = args.listen.partition(":")
    app = create_app(scenario, speed=args.speed)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="warning")
    return EXIT_OK


def cmd_validate_dsl(args) -> int:
    path = Path(args.spec_path)
    try:
        text = path.read_text("utf-8")
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        spec = dsl.parse(text)
    except dsl.DslSyntaxError as err:
        print(
            json.dumps(
                {"severity": "error", "code": "syntax", "message": str(err)},
                sort_keys=True,
            )
        )
        return EXIT_VALIDATION
    diagnostics = dsl.validate(spec)
    for diag in diagnostics:
        if diag.severity == "info":
            continue
        print(
            json.dumps(
                {"severity": diag.severity, "code": diag.code, "message": diag.message},
                sort_keys=True,
            )
        )
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        return EXIT_VALIDATION
    print(
        json.dumps(
            {
                "severity": "ok",
                "statechart": spec.name,
                "states": len(spec.states),
                "transitions": len(spec.transitions),
            },
            sort_keys=True,
        )
    )
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "run": cmd_run,
        "replay": cmd_replay,
        "serve": cmd_serve,
        "validate-dsl": cmd_validate_dsl,
    }[args.subcommand]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
