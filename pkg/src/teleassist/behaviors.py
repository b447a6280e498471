"""Concrete behavior components: nominal lane following and the remote
assistance behavior that owns the operator session.

The remote assistance behavior keeps the vehicle at standstill from the
moment it takes over until a concrete trajectory proposal has been approved,
executes the approved trajectory only while the approval stays fresh, and
releases control when the operator hands back. Operator-modified constraints
live only inside this behavior; lane following always plans against the
pristine perception output.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .arbitration import (Arbitrator, BehaviorComponent, Command, PRIORITY, COST,
                          StandstillCommand, TrajectoryCommand, ArbitrationEngine)
from .corridor import (Corridor, RejectedModification, apply_lateral_modification,
                       apply_longitudinal_modification, carve_obstacles)
from .mpcc import InfeasibleError, MpccPlanner, Trajectory
from .protocol import (Approval, AssistanceRequest, Handover, ModifyConstraints,
                       PlanningFailed, SessionChannel, StopExecution, TeleopMessage,
                       TrajectoryProposal, LATERAL)
from .world import EnvironmentModel, Perception, SimParams

log = logging.getLogger(__name__)

FOLLOW_LANE = "FollowLane"
TELEOPERATION = "Teleoperation"
URBAN_DRIVING = "UrbanDriving"
AUTOMATED_DRIVING = "AutomatedDriving"

# session states
INACTIVE = "inactive"
REQUESTED = "requested"
AWAITING_MODIFICATION = "awaiting_modification"
PROPOSAL_PENDING = "proposal_pending"
EXECUTING = "executing"
RELEASE_REQUESTED = "release_requested"


@dataclass(frozen=True)
class Situation:
    """World snapshot one arbitration pass works on."""

    t: float
    env: EnvironmentModel
    standstill_time: float
    operator_connected: bool = False


class FollowLaneBehavior(BehaviorComponent):
    """Nominal driving: plan against the perceived corridor, replanning on a
    fixed period; an infeasible plan degrades to standstill."""

    def __init__(self, planner: MpccPlanner, params: SimParams):
        super().__init__(FOLLOW_LANE)
        self.planner = planner
        self.params = params
        self._cached: TrajectoryCommand | None = None
        self._next_replan = -1.0

    def invocation(self, situation: Situation) -> bool:
        return True

    def commitment(self, situation: Situation) -> bool:
        return True

    def gain_control(self, situation: Situation) -> None:
        self.planner.reset()
        self._cached = None
        self._next_replan = -1.0

    def lose_control(self, situation: Situation) -> None:
        self._cached = None

    def command(self, situation: Situation) -> Command:
        if self._cached is not None and situation.t < self._next_replan:
            return self._cached
        ego = situation.env.ego
        try:
            traj = self.planner.solve(situation.env.corridor, ego, situation.t)
        except InfeasibleError as exc:
            log.warning("lane-follow plan infeasible at t=%.1f: %s", situation.t, exc)
            self._cached = None
            self._next_replan = situation.t + self.params.replan_every * self.params.tick
            return StandstillCommand(pose=ego)
        self._cached = TrajectoryCommand(traj)
        self._next_replan = situation.t + self.params.replan_every * self.params.tick
        return self._cached


class TeleopBehavior(BehaviorComponent):
    """Remote assistance: invoked after a prolonged standstill, committed
    until the operator hands control back."""

    def __init__(self, planner: MpccPlanner, perception: Perception,
                 channel: SessionChannel, params: SimParams):
        super().__init__(TELEOPERATION)
        self.planner = planner
        self.perception = perception
        self.channel = channel
        self.params = params
        self.session_state = INACTIVE
        self.modified_corridor: Corridor | None = None
        self._polygons: list = []
        self._stop_override: float | None = None
        self._stop_overridden = False
        self._proposal_id = 0
        self._proposal: Trajectory | None = None
        self._proposal_json: dict | None = None
        self._anchored: TrajectoryCommand | None = None
        self._approval_time: float | None = None
        self._last_release_time: float | None = None

    # -- arbitration interface ------------------------------------------------

    def invocation(self, situation: Situation) -> bool:
        standing = (situation.env.ego.speed <= self.params.v_eps
                    and situation.standstill_time >= self.params.invocation_standstill)
        if not standing:
            return False
        if self._last_release_time is not None:
            # a fresh standstill episode must accumulate after a handover,
            # otherwise assistance would re-trigger the moment it released
            if situation.t - self._last_release_time < self.params.invocation_standstill:
                return False
        return True

    def commitment(self, situation: Situation) -> bool:
        return self.session_state not in (INACTIVE, RELEASE_REQUESTED)

    def gain_control(self, situation: Situation) -> None:
        if self.session_state == INACTIVE:
            self.session_state = REQUESTED
            self.channel.send(AssistanceRequest(), situation.t)
            log.info("assistance requested at t=%.1f", situation.t)

    def lose_control(self, situation: Situation) -> None:
        self._last_release_time = situation.t
        self.session_state = INACTIVE
        self.modified_corridor = None
        self._polygons = []
        self._stop_override = None
        self._stop_overridden = False
        self._proposal = None
        self._proposal_json = None
        self._anchored = None
        self._approval_time = None
        self.planner.reset()

    def command(self, situation: Situation) -> Command:
        if self.session_state == EXECUTING and self._anchored is not None:
            return self._anchored
        return StandstillCommand(pose=situation.env.ego)

    # -- session handling -------------------------------------------------------

    def process(self, messages: list[TeleopMessage], situation: Situation) -> None:
        """Apply one tick's worth of operator messages; called ahead of the
        arbitration pass so conditions observe the updated session."""
        if self.session_state == REQUESTED and situation.operator_connected:
            self.session_state = AWAITING_MODIFICATION
        for msg in messages:
            self._handle(msg, situation)
        if self.session_state == EXECUTING and self._approval_time is not None:
            age = situation.t - self._approval_time
            # exact-boundary ages count as fresh (tick arithmetic jitter)
            if age > self.params.heartbeat_timeout + 1e-9:
                log.warning("approval stale (%.2f s); halting execution", age)
                self._drop_proposal()
                self.session_state = AWAITING_MODIFICATION

    def _handle(self, msg: TeleopMessage, situation: Situation) -> None:
        payload = msg.payload
        if self.session_state == INACTIVE:
            log.warning("ignoring %s outside a session", payload.kind)
            return
        if isinstance(payload, ModifyConstraints):
            if self.session_state in (AWAITING_MODIFICATION, PROPOSAL_PENDING, EXECUTING):
                self._apply_modification(payload, situation)
            else:
                log.warning("ignoring modification in state %s", self.session_state)
        elif isinstance(payload, Approval):
            self._handle_approval(payload, situation)
        elif isinstance(payload, StopExecution):
            if self.session_state == EXECUTING:
                log.info("operator stopped execution at t=%.1f", situation.t)
            self._drop_proposal()
            if self.session_state in (PROPOSAL_PENDING, EXECUTING):
                self.session_state = AWAITING_MODIFICATION
        elif isinstance(payload, Handover):
            log.info("operator handed control back at t=%.1f", situation.t)
            self.session_state = RELEASE_REQUESTED
        else:
            log.warning("unexpected %s from operator", payload.kind)

    def _handle_approval(self, payload: Approval, situation: Situation) -> None:
        if self._proposal is None or payload.proposal_id != self._proposal_id:
            log.warning("approval for unknown proposal %s", payload.proposal_id)
            return
        if self.session_state == PROPOSAL_PENDING:
            self._anchored = TrajectoryCommand(self._proposal.shifted(situation.t))
            self.session_state = EXECUTING
            self._approval_time = situation.t
        elif self.session_state == EXECUTING:
            self._approval_time = situation.t

    def _drop_proposal(self) -> None:
        self._proposal = None
        self._proposal_json = None
        self._anchored = None
        self._approval_time = None

    def _apply_modification(self, payload: ModifyConstraints, situation: Situation) -> None:
        env = situation.env
        polygons = list(self._polygons)
        stop_override, overridden = self._stop_override, self._stop_overridden
        if payload.mod_type == LATERAL:
            polygons.append([tuple(v) for v in payload.polygon])
        else:
            stop_override, overridden = payload.stop_progress, True
        try:
            corridor = self._build_corridor(env, polygons, stop_override, overridden)
        except RejectedModification as exc:
            log.warning("modification rejected: %s", exc)
            self.channel.send(PlanningFailed(reason=f"modification rejected: {exc}"), situation.t)
            return

        ego = env.ego
        try:
            proposal = self.planner.solve(corridor, ego, 0.0)
        except InfeasibleError as exc:
            log.warning("no feasible trajectory under modified constraints: %s", exc)
            self.channel.send(PlanningFailed(reason=str(exc)), situation.t)
            self._drop_proposal()
            self.session_state = AWAITING_MODIFICATION
            return

        self._polygons = polygons
        self._stop_override, self._stop_overridden = stop_override, overridden
        self.modified_corridor = corridor
        self._drop_proposal()
        self._proposal = proposal
        self._proposal_id += 1
        self._proposal_json = proposal.to_json()
        self.channel.send(TrajectoryProposal(proposal_id=self._proposal_id,
                                             trajectory=self._proposal_json), situation.t)
        self.session_state = PROPOSAL_PENDING

    def _build_corridor(self, env: EnvironmentModel, polygons, stop_override,
                        overridden) -> Corridor:
        """Operator view: lane bounds, union of operator polygons, obstacle
        carving, then the stop limit (operator override wins)."""
        corridor = env.lane_corridor
        path = self.perception.path
        min_width = self.perception.min_band_width
        for poly in polygons:
            corridor = apply_lateral_modification(corridor, path, poly, min_width)
        footprints = [fp for _, fp in env.obstacle_footprints]
        corridor, blocked = carve_obstacles(corridor, path, footprints, min_width)
        if overridden:
            corridor = apply_longitudinal_modification(corridor, stop_override)
        else:
            stop = self.perception.stop_from_blocked(blocked, env.ego.progress)
            corridor = apply_longitudinal_modification(corridor, stop)
        return corridor

    # -- introspection ----------------------------------------------------------

    def session_open(self) -> bool:
        return self.session_state != INACTIVE

    def active_corridor(self, env: EnvironmentModel) -> Corridor:
        return self.modified_corridor if self.modified_corridor is not None else env.corridor

    def proposal_json(self) -> dict | None:
        return self._proposal_json


def build_driving_graph(follow_lane: FollowLaneBehavior,
                        teleop: TeleopBehavior) -> ArbitrationEngine:
    """Root priority arbitrator with assistance first, nominal driving
    behind a cost arbitrator."""
    urban = Arbitrator(URBAN_DRIVING, [follow_lane], policy=COST,
                       cost_fn=lambda situation, option: 1.0)
    root = Arbitrator(AUTOMATED_DRIVING, [teleop, urban], policy=PRIORITY)
    return ArbitrationEngine(root)
