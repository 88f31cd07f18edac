"""Command-line entry point.

Subcommands::

    capguard run <scenario> [--params FILE] [--out DIR] [--format csv|jsonl]
    capguard check <model|params|scenario file>
    capguard serve <scenario> [--port N] [--host H]

Exit codes: 0 success, 1 input error, 2 safety violation.  Every error path
emits exactly one machine-readable JSON object on stderr.  The environment
variable CAPGUARD_LOG selects the log level (DEBUG, INFO, ...).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .control import ParamError, load_params, params_from_dict
from .kinematics import ModelError, model_from_dict
from .scenarios import SHIPPED, resolve_scenario
from .sim import ScenarioError, Simulation, scenario_from_dict

log = logging.getLogger("capguard")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VIOLATION = 2


def _error(message: str, **detail) -> None:
    print(json.dumps({"error": message, **detail}), file=sys.stderr)


def _configure_logging():
    level = os.environ.get("CAPGUARD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def cmd_run(args) -> int:
    try:
        scenario = resolve_scenario(args.scenario)
        if args.params:
            overrides = json.loads(Path(args.params).read_text())
            scenario.params = params_from_dict(overrides, base=scenario.params)
            scenario.params = scenario.params.with_model_defaults(scenario.model)
    except (ScenarioError, ModelError, ParamError) as exc:
        _error(str(exc), kind="input")
        return EXIT_INPUT
    except (OSError, json.JSONDecodeError) as exc:
        _error(f"cannot read parameter file: {exc}", kind="input")
        return EXIT_INPUT

    sim = Simulation(scenario)
    log.info("running %s: %d ticks at dt=%.3f", scenario.name,
             round(scenario.duration / sim.controller.params.dt),
             sim.controller.params.dt)
    trace, metrics = sim.run()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        (out_dir / "trace.csv").write_text(trace.to_csv())
    else:
        (out_dir / "trace.jsonl").write_text(trace.to_jsonl())
    (out_dir / "metrics.json").write_text(json.dumps(metrics.to_dict(), indent=2) + "\n")
    log.info("wrote trace and metrics to %s", out_dir)

    if metrics.violation:
        _error(metrics.violation_reason or "safety violation", kind="violation",
               min_d_min=metrics.min_d_min)
        return EXIT_VIOLATION
    return EXIT_OK


def _sniff_kind(doc: dict) -> str:
    if "joints" in doc:
        return "model"
    if "task" in doc or "duration" in doc:
        return "scenario"
    return "params"


def cmd_check(args) -> int:
    path = Path(args.file)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        _error(f"cannot read {path}: {exc}", kind="input")
        return EXIT_INPUT
    except json.JSONDecodeError as exc:
        _error(f"{path} is not valid JSON: {exc}", kind="input")
        return EXIT_INPUT
    if not isinstance(doc, dict):
        _error(f"{path}: top-level JSON object expected", kind="input")
        return EXIT_INPUT

    kind = _sniff_kind(doc)
    try:
        if kind == "model":
            model = model_from_dict(doc, name=path.stem)
            print(f"OK: robot model {model.name!r}, {model.dof} joints, "
                  f"{len(model.capsules)} capsules")
        elif kind == "scenario":
            scenario = scenario_from_dict(doc, base_dir=path.parent)
            print(f"OK: scenario {scenario.name!r}, duration {scenario.duration}s, "
                  f"{len(scenario.plan.segments)} segments")
        else:
            params = params_from_dict(doc)
            print(f"OK: controller parameters ({len(doc)} fields set)")
    except (ModelError, ScenarioError, ParamError, ValueError) as exc:
        _error(str(exc), kind=kind, file=str(path))
        return EXIT_INPUT
    return EXIT_OK


def cmd_serve(args) -> int:
    try:
        scenario = resolve_scenario(args.scenario)
    except (ScenarioError, ModelError, ParamError) as exc:
        _error(str(exc), kind="input")
        return EXIT_INPUT
    import asyncio

    from .bridge import BridgeServer

    server = BridgeServer(scenario, host=args.host, port=args.port)
    try:
        asyncio.run(server.serve_forever())
    except KeyboardInterrupt:
        log.info("interrupted, shutting down")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capguard",
        description="Collision-avoidance motion control: scenario runner, "
                    "validator and live bridge.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write trace + metrics")
    run.add_argument("scenario",
                     help=f"scenario file or shipped name ({', '.join(SHIPPED)})")
    run.add_argument("--params", help="JSON file with parameter overrides")
    run.add_argument("--out", default="out", help="output directory (default: out)")
    run.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check", help="validate a model, params or scenario file")
    check.add_argument("file")
    check.set_defaults(func=cmd_check)

    serve = sub.add_parser("serve", help="serve a scenario live over a websocket")
    serve.add_argument("scenario")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--host", default="127.0.0.1")
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
