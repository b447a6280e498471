"""Scenario runner: composes world, arbitration graph, planner and the
operator protocol, drives the fixed-step loop and writes the timeline log.

The scripted operator runs in-process but every one of its messages passes
through encode/decode and the same queues the network path uses, so both
operator flavors exercise identical vehicle-side code.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

from .arbitration import NoApplicableOption, StandstillCommand, snapshot_graph
from .behaviors import (FollowLaneBehavior, Situation, TeleopBehavior,
                        build_driving_graph)
from .mpcc import MpccPlanner, PlannerConfig, PlannerWeights
from .path import project_to_path
from .protocol import (Approval, DelayConfig, DelayInjector, Handover,
                       ModifyConstraints, SessionChannel, StateUpdate,
                       StopExecution, TeleopMessage, TeleopServer, decode, encode,
                       LATERAL, LONGITUDINAL)
from .world import Perception, Scenario, step

log = logging.getLogger(__name__)

LOG_SCHEMA_VERSION = 1

EXIT_GOAL = 0
EXIT_TIMEOUT = 2


# --- scripted operator ---------------------------------------------------------

ACTION_KINDS = ("modify_lateral", "modify_longitudinal", "start_approval",
                "stop_approval", "stop_execution", "handover")


@dataclass
class OperatorAction:
    """One scripted step, triggered at an absolute time or a delay after the
    first message of a given kind; each action fires at most once."""

    action: str
    at_time: float | None = None
    after: str | None = None
    delay: float = 0.0
    polygon: list | None = None
    stop_progress: float | None = None
    fired: bool = False
    armed_at: float | None = None

    def __post_init__(self):
        if self.action not in ACTION_KINDS:
            raise ValueError(f"unknown operator action {self.action!r}")
        if (self.at_time is None) == (self.after is None):
            raise ValueError("action needs exactly one of at_time/after")


class ScriptedOperator:
    """Replays operator actions against the vehicle; approval, once started,
    heartbeats every tick until a handover or an explicit stop_approval."""

    def __init__(self, actions: list[OperatorAction]):
        self.actions = actions
        self._approving = False
        self._last_proposal_id: int | None = None

    @staticmethod
    def from_json(doc: dict) -> "ScriptedOperator":
        actions = [
            OperatorAction(
                action=a["action"],
                at_time=a.get("at_time"),
                after=a.get("after"),
                delay=float(a.get("delay", 0.0)),
                polygon=a.get("polygon"),
                stop_progress=a.get("stop_progress"),
            )
            for a in doc["actions"]
        ]
        return ScriptedOperator(actions)

    def observe(self, message: TeleopMessage, now: float) -> None:
        kind = message.payload.kind
        if kind == "trajectory_proposal":
            self._last_proposal_id = message.payload.proposal_id
        for action in self.actions:
            if action.after == kind and action.armed_at is None and not action.fired:
                action.armed_at = now + action.delay

    def step(self, now: float) -> list:
        """Payloads to send this tick."""
        out = []
        for action in self.actions:
            due_at = action.at_time if action.at_time is not None else action.armed_at
            if action.fired or due_at is None or now < due_at:
                continue
            action.fired = True
            if action.action == "modify_lateral":
                out.append(ModifyConstraints(mod_type=LATERAL, polygon=action.polygon))
            elif action.action == "modify_longitudinal":
                out.append(ModifyConstraints(mod_type=LONGITUDINAL,
                                             stop_progress=action.stop_progress))
            elif action.action == "start_approval":
                self._approving = True
            elif action.action == "stop_approval":
                self._approving = False
            elif action.action == "stop_execution":
                out.append(StopExecution())
            elif action.action == "handover":
                self._approving = False
                out.append(Handover())
        if self._approving and self._last_proposal_id is not None:
            out.append(Approval(proposal_id=self._last_proposal_id))
        return out


# --- timeline log ---------------------------------------------------------------

class TimelineLog:
    """Append-only per-tick and per-event records, one JSON object each."""

    def __init__(self, meta: dict):
        self.records: list[dict] = [{"type": "meta", "version": LOG_SCHEMA_VERSION, **meta}]

    def tick(self, **fields) -> None:
        self.records.append({"type": "tick", **fields})

    def event(self, t: float, event: str, **fields) -> None:
        self.records.append({"type": "event", "t": t, "event": event, **fields})

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec, separators=(",", ":")))
                fh.write("\n")

    @staticmethod
    def load(path: str) -> list[dict]:
        with open(path, "r", encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]


@dataclass
class RunResult:
    exit_code: int
    log: TimelineLog
    final_world: object
    goal_reached: bool
    wall_time: float
    transcript: list[dict] = field(default_factory=list)


# --- harness ---------------------------------------------------------------------

class Harness:
    def __init__(self, scenario: Scenario,
                 operator: ScriptedOperator | None = None,
                 seed: int = 0,
                 time_limit: float = 180.0,
                 inbound_delay: DelayConfig | None = None,
                 outbound_delay: DelayConfig | None = None,
                 listen: tuple[str, int] | None = None,
                 realtime: bool = False,
                 pace: float = 0.0,
                 planner_config: PlannerConfig | None = None,
                 svg_dir: str | None = None):
        scenario.validate()
        self.scenario = scenario
        self.operator = operator
        self.seed = seed
        self.time_limit = time_limit
        self.realtime = realtime
        self.pace = pace  # fixed wall-clock sleep per tick (slower than realtime)
        self.svg_dir = svg_dir

        params = scenario.params
        self.params = params
        self.path = scenario.reference_path()
        self.perception = Perception(scenario)
        self.channel = SessionChannel()
        config = planner_config or PlannerConfig()
        weights = PlannerWeights()
        self.follow_lane = FollowLaneBehavior(
            MpccPlanner(self.path, weights, config, scenario.vehicle), params)
        self.teleop = TeleopBehavior(
            MpccPlanner(self.path, weights, config, scenario.vehicle),
            self.perception, self.channel, params)
        self.engine = build_driving_graph(self.follow_lane, self.teleop)

        self.inject_in = DelayInjector(inbound_delay or DelayConfig(seed=seed))
        self.inject_out = DelayInjector(outbound_delay or DelayConfig(seed=seed + 1))
        self._op_seq = 0
        self._sim_t = 0.0

        self.server: TeleopServer | None = None
        if listen is not None:
            self.server = TeleopServer(self.channel, listen[0], listen[1],
                                       clock=lambda: self._sim_t)
        elif operator is not None:
            self.channel.operator_connected = True

        self.log = TimelineLog(meta={
            "scenario": scenario.name,
            "seed": seed,
            "tick": params.tick,
        })
        self.transcript: list[dict] = []

    # -- message plumbing -------------------------------------------------------

    def _operator_send(self, payload, t: float) -> None:
        """Scripted operator -> vehicle, through the codec and delay model."""
        self._op_seq += 1
        msg = TeleopMessage(session=self.channel.session_id, seq=self._op_seq,
                            t=t, payload=payload)
        frame = encode(msg)
        self.transcript.append({"dir": "to_vehicle", "t": t,
                                "frame": frame.decode("utf-8").rstrip("\n")})
        self.inject_in.offer(decode(frame), now=t)

    def _broadcast_state(self, situation, t: float) -> None:
        env_json = situation.env.to_json(self.scenario.lane_map)
        update = StateUpdate(
            environment=env_json,
            session_state=self.teleop.session_state,
            corridor=self.teleop.active_corridor(situation.env).to_json(),
            proposal=self.teleop.proposal_json(),
            arbitration=snapshot_graph(self.engine.root),
        )
        self.channel.send(update, t)

    # -- main loop ----------------------------------------------------------------

    def run(self) -> RunResult:
        scenario = self.scenario
        params = self.params
        tick = params.tick
        world = scenario.initial_world()
        goal_reached = False
        started = time.monotonic()
        if self.server is not None:
            self.server.start()
            log.info("listening for an operator on %s:%d", *self.server.address)

        last_behavior: str | None = None
        try:
            while world.t < self.time_limit:
                t = world.t
                self._sim_t = t

                # 1. deliver delayed operator traffic, then drain the queue
                for msg in self.inject_in.poll(t):
                    self.channel.offer_inbound(msg)
                messages = self.channel.drain_inbound()
                for msg in messages:
                    self.log.event(t, "message", direction="rx", kind=msg.payload.kind,
                                   seq=msg.seq)

                # 2. perceive and assemble the situation
                env = self.perception.perceive(world, last_behavior)
                situation = Situation(t=t, env=env, standstill_time=world.standstill_time,
                                      operator_connected=self.channel.operator_connected)

                # 3. session transitions ahead of arbitration
                self.teleop.process(messages, situation)

                # 4. arbitration pass
                try:
                    command, _ = self.engine.evaluate(situation)
                except NoApplicableOption:
                    command = StandstillCommand(pose=world.ego)
                behavior = self.engine.active_leaf_name()
                if behavior != last_behavior:
                    self.log.event(t, "behavior_switch", **{"from": last_behavior,
                                                            "to": behavior})
                    last_behavior = behavior

                # 5. advance the world; the onset stamp is the start of the
                # first stationary step, which is what the timer counts from
                new_world = step(world, command, tick, params.v_eps)
                if new_world.standstill_time > 0.0 and world.standstill_time == 0.0:
                    self.log.event(world.t, "standstill_onset")
                world = new_world

                # 6. state broadcast while the session is open
                if self.teleop.session_open():
                    self._broadcast_state(situation, t)

                # 7. route vehicle traffic to the operator
                for msg in self.channel.drain_outbound():
                    self.log.event(t, "message", direction="tx", kind=msg.payload.kind,
                                   seq=msg.seq)
                    if msg.payload.kind != "state_update":
                        self.transcript.append({
                            "dir": "to_operator", "t": t,
                            "frame": encode(msg).decode("utf-8").rstrip("\n")})
                    if self.server is not None:
                        self.server.transmit(msg)
                    else:
                        self.inject_out.offer(msg, now=t)

                # 8. scripted operator reacts
                if self.operator is not None:
                    for msg in self.inject_out.poll(t):
                        self.operator.observe(msg, t)
                    for payload in self.operator.step(t):
                        self._operator_send(payload, t)

                # 9. per-tick record
                _, lateral = project_to_path(self.path, world.ego.position())
                self.log.tick(t=world.t, behavior=behavior, speed=world.ego.speed,
                              progress=world.ego.progress, lateral_offset=lateral,
                              session=self.teleop.session_state,
                              standstill_time=world.standstill_time)

                if world.ego.progress >= scenario.goal_progress:
                    goal_reached = True
                    self.log.event(world.t, "goal_reached")
                    break

                if self.realtime:
                    lag = world.t - (time.monotonic() - started)
                    if lag > 0:
                        time.sleep(lag)
                elif self.pace > 0.0:
                    time.sleep(self.pace)
        finally:
            if self.server is not None:
                self.server.stop()

        wall = time.monotonic() - started
        if self.svg_dir:
            self._dump_svg(world)
        return RunResult(
            exit_code=EXIT_GOAL if goal_reached else EXIT_TIMEOUT,
            log=self.log,
            final_world=world,
            goal_reached=goal_reached,
            wall_time=wall,
            transcript=self.transcript,
        )

    def _dump_svg(self, world) -> None:
        import os

        from .svgdump import render_scene
        os.makedirs(self.svg_dir, exist_ok=True)
        env = self.perception.perceive(world, self.engine.active_leaf_name())
        corridor = self.teleop.active_corridor(env)
        doc = render_scene(self.path, corridor,
                           obstacles=[fp for _, fp in env.obstacle_footprints],
                           ego=world.ego)
        out = os.path.join(self.svg_dir, f"{self.scenario.name.lower()}_final.svg")
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(doc)


# --- timeline verification --------------------------------------------------------


def _match(record: dict, selector: dict) -> bool:
    return all(record.get(k) == v for k, v in selector.items())


def _find(records: list[dict], selector: dict, start: int = 0) -> int | None:
    for i in range(start, len(records)):
        if records[i].get("type") == "event" and _match(records[i], selector):
            return i
    return None


@dataclass(frozen=True)
class CheckResult:
    description: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class VerifyReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            suffix = f" ({c.detail})" if c.detail else ""
            lines.append(f"{status}: {c.description}{suffix}")
        return "\n".join(lines)


def verify_timeline(records: list[dict], expectation: dict) -> VerifyReport:
    """Check event ordering and inter-event gaps against declared tolerances."""
    results = []
    for check in expectation["checks"]:
        kind = check["type"]
        if kind == "event_order":
            pos = 0
            ok, detail = True, ""
            for sel in check["events"]:
                idx = _find(records, sel, pos)
                if idx is None:
                    ok, detail = False, f"missing or out of order: {sel}"
                    break
                pos = idx + 1
            results.append(CheckResult(check.get("description", "event order"), ok, detail))
        elif kind == "gap":
            i = _find(records, check["from"])
            j = _find(records, check["to"], (i + 1) if i is not None else 0)
            if i is None or j is None:
                results.append(CheckResult(check.get("description", "gap"), False,
                                           "event missing"))
                continue
            gap = records[j]["t"] - records[i]["t"]
            lo = check.get("min", -float("inf"))
            hi = check.get("max", float("inf"))
            ok = lo <= gap <= hi
            results.append(CheckResult(
                check.get("description", "gap"), ok,
                f"gap={gap:.3f}s bounds=[{lo},{hi}]"))
        elif kind == "event_exists":
            idx = _find(records, check["event"])
            results.append(CheckResult(check.get("description", "event exists"),
                                       idx is not None,
                                       "" if idx is not None else f"missing {check['event']}"))
        elif kind == "event_absent":
            idx = _find(records, check["event"])
            results.append(CheckResult(check.get("description", "event absent"),
                                       idx is None,
                                       "" if idx is None else f"found {check['event']}"))
        else:
            results.append(CheckResult(f"unknown check type {kind}", False))
    return VerifyReport(checks=tuple(results))
