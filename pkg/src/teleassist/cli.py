"""Command line entry point: run/verify/record subcommands.

Every flag can also be set through an environment variable of the same name
prefixed with TELEASSIST_ (e.g. TELEASSIST_SCENARIO=B).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources

from .harness import Harness, ScriptedOperator, TimelineLog, verify_timeline
from .protocol import DelayConfig
from .world import UnknownScenario, load_scenario

log = logging.getLogger(__name__)

_BUILTIN_SCRIPTS = {"A": "script_a.json", "B": "script_b.json"}
_BUILTIN_EXPECTATIONS = {"A": "expect_a.json", "B": "expect_b.json"}


def _env_default(name: str, fallback=None):
    return os.environ.get(f"TELEASSIST_{name.upper().replace('-', '_')}", fallback)


def _load_json_resource(table: dict, name: str) -> dict:
    if name in table:
        ref = resources.files("teleassist.data") / table[name]
        return json.loads(ref.read_text(encoding="utf-8"))
    with open(name, "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_operator_script(name: str) -> ScriptedOperator:
    """Bundled script by scenario name or a JSON file path."""
    return ScriptedOperator.from_json(_load_json_resource(_BUILTIN_SCRIPTS, name))


def load_expectation(name: str) -> dict:
    return _load_json_resource(_BUILTIN_EXPECTATIONS, name)


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", default=_env_default("scenario", "A"),
                        help="bundled scenario name (A/B) or scenario JSON path")
    parser.add_argument("--operator-script", default=_env_default("operator-script"),
                        help="bundled script name (A/B) or script JSON path")
    parser.add_argument("--listen", default=_env_default("listen"),
                        help="serve a network operator on HOST:PORT instead of a script")
    parser.add_argument("--seed", type=int, default=int(_env_default("seed", 0)))
    parser.add_argument("--tick", type=float, default=_env_default("tick"),
                        help="override the scenario tick period")
    parser.add_argument("--log", default=_env_default("log"),
                        help="timeline log output path (line-delimited JSON)")
    parser.add_argument("--svg-dump", default=_env_default("svg-dump"),
                        help="directory for final-scene SVG snapshots")
    parser.add_argument("--time-limit", type=float,
                        default=float(_env_default("time-limit", 180.0)))
    parser.add_argument("--delay", type=float, default=float(_env_default("delay", 0.0)),
                        help="fixed operator-to-vehicle message delay in seconds")
    parser.add_argument("--jitter", type=float, default=float(_env_default("jitter", 0.0)))
    parser.add_argument("--approval-drop", type=float,
                        default=float(_env_default("approval-drop", 0.0)))


def _build_harness(args) -> Harness:
    import dataclasses

    scenario = load_scenario(args.scenario)
    if args.tick:
        scenario = dataclasses.replace(
            scenario, params=dataclasses.replace(scenario.params, tick=float(args.tick)))
    operator = None
    listen = None
    if args.listen:
        host, _, port = args.listen.rpartition(":")
        listen = (host or "127.0.0.1", int(port))
    else:
        script = args.operator_script or scenario.name
        operator = load_operator_script(script)
    delay = DelayConfig(fixed_delay=args.delay, jitter=args.jitter,
                        approval_drop_rate=args.approval_drop, seed=args.seed)
    return Harness(scenario, operator=operator, seed=args.seed,
                   time_limit=args.time_limit, inbound_delay=delay,
                   listen=listen, realtime=listen is not None,
                   svg_dir=args.svg_dump)


def cmd_run(args) -> int:
    try:
        harness = _build_harness(args)
    except UnknownScenario as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    result = harness.run()
    if args.log:
        result.log.write(args.log)
    status = "goal reached" if result.goal_reached else "time limit hit"
    print(f"{status} after {result.final_world.t:.1f} s simulated "
          f"({result.wall_time:.1f} s wall)")
    return result.exit_code


def cmd_verify(args) -> int:
    records = TimelineLog.load(args.log)
    expectation = load_expectation(args.expect)
    report = verify_timeline(records, expectation)
    print(report.render())
    return 0 if report.passed else 1


def cmd_record(args) -> int:
    try:
        harness = _build_harness(args)
    except UnknownScenario as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    result = harness.run()
    if args.log:
        result.log.write(args.log)
    with open(args.transcript, "w", encoding="utf-8") as fh:
        for entry in result.transcript:
            fh.write(json.dumps(entry, separators=(",", ":")))
            fh.write("\n")
    print(f"wrote {len(result.transcript)} frames to {args.transcript}")
    return result.exit_code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="teleassist",
                                     description="remote-assistance driving simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario")
    _add_run_args(run_p)
    run_p.set_defaults(func=cmd_run)

    verify_p = sub.add_parser("verify", help="check a timeline log against expectations")
    verify_p.add_argument("--log", required=True)
    verify_p.add_argument("--expect", default=_env_default("expect", "A"),
                          help="bundled expectation name (A/B) or JSON path")
    verify_p.set_defaults(func=cmd_verify)

    record_p = sub.add_parser("record", help="run a scenario and record the frame transcript")
    _add_run_args(record_p)
    record_p.add_argument("--transcript", required=True)
    record_p.set_defaults(func=cmd_record)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
