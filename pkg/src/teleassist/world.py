"""Deterministic fixed-step world: lane map, obstacles, ego kinematics under
perfect trajectory tracking, and a perception stub that turns obstacles into
corridor constraints.

The simulation is a pure fold over commands: `step` returns a new WorldState
and never mutates, so replaying a command log reproduces the exact same
state sequence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
import numpy as np

from .arbitration import StandstillCommand, TrajectoryCommand
from .corridor import WIDTH_MARGIN, Corridor, carve_obstacles, uniform_corridor
from .path import ReferencePath, arc_path, straight_path
from .vehicle import VehicleParams, VehicleState

SCHEMA_VERSION = 1

GROUND_TRUTH_BLOCKING = "blocking"
GROUND_TRUTH_IGNORABLE = "ignorable"


class UnknownScenario(Exception):
    pass


@dataclass(frozen=True)
class SimParams:
    tick: float = 0.1
    replan_every: int = 5              # follow-lane replan period in ticks
    v_eps: float = 0.01                # standstill speed threshold
    standoff: float = 3.0              # stop margin before a blocking obstacle
    invocation_standstill: float = 25.0  # standstill duration before assistance
    heartbeat_timeout: float = 1.0     # max age of the operator approval
    corridor_spacing: float = 0.5

    def to_json(self) -> dict:
        return {
            "tick": self.tick,
            "replan_every": self.replan_every,
            "v_eps": self.v_eps,
            "standoff": self.standoff,
            "invocation_standstill": self.invocation_standstill,
            "heartbeat_timeout": self.heartbeat_timeout,
            "corridor_spacing": self.corridor_spacing,
        }

    @staticmethod
    def from_json(doc: dict) -> "SimParams":
        return SimParams(**doc)


@dataclass(frozen=True)
class Lane:
    centerline: np.ndarray
    width: float
    crossable_left: bool = False
    crossable_right: bool = False


@dataclass(frozen=True)
class LaneMap:
    lanes: tuple[Lane, ...]
    shoulders: tuple[np.ndarray, ...] = ()


@dataclass(frozen=True)
class Obstacle:
    obstacle_id: str
    footprint: np.ndarray
    ground_truth: str = GROUND_TRUTH_BLOCKING


@dataclass(frozen=True)
class WorldState:
    t: float
    ego: VehicleState
    obstacles: tuple[Obstacle, ...]
    standstill_time: float = 0.0


@dataclass(frozen=True)
class EnvironmentModel:
    """Vehicle-side snapshot handed to behaviors and the operator.

    Ground-truth obstacle classes are deliberately absent: the vehicle only
    perceives footprints. lane_corridor carries the lane-edge bounds before
    any obstacle processing; corridor is the nominal planning view.
    """

    ego: VehicleState
    obstacle_footprints: tuple[tuple[str, np.ndarray], ...]
    corridor: Corridor
    lane_corridor: Corridor
    active_behavior: str | None = None

    def to_json(self, lane_map: LaneMap | None = None) -> dict:
        doc = {
            "ego": {"x": self.ego.x, "y": self.ego.y, "heading": self.ego.heading,
                    "speed": self.ego.speed, "progress": self.ego.progress},
            "obstacles": [{"id": oid, "polygon": fp.tolist()}
                          for oid, fp in self.obstacle_footprints],
            "corridor": self.corridor.to_json(),
            "active_behavior": self.active_behavior,
        }
        if lane_map is not None:
            doc["lanes"] = [{"centerline": lane.centerline.tolist(), "width": lane.width}
                            for lane in lane_map.lanes]
            doc["shoulders"] = [sh.tolist() for sh in lane_map.shoulders]
        return doc


@dataclass(frozen=True)
class Scenario:
    name: str
    lane_map: LaneMap
    obstacles: tuple[Obstacle, ...]
    route_lane: int
    start_progress: float
    start_speed: float
    goal_progress: float
    params: SimParams = SimParams()
    vehicle: VehicleParams = VehicleParams()

    def reference_path(self) -> ReferencePath:
        return ReferencePath(self.lane_map.lanes[self.route_lane].centerline)

    def initial_world(self) -> WorldState:
        path = self.reference_path()
        pt = path.point_at(self.start_progress)
        ego = VehicleState(x=float(pt[0]), y=float(pt[1]),
                           heading=float(path.heading_at(self.start_progress)),
                           speed=self.start_speed, progress=self.start_progress)
        return WorldState(t=0.0, ego=ego, obstacles=self.obstacles)

    def validate(self) -> None:
        min_width = 2.0 * self.vehicle.body_radius + 0.2
        for lane in self.lane_map.lanes:
            if lane.width < min_width:
                raise ValueError(f"lane width {lane.width} below {min_width}")

    def to_json(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "name": self.name,
            "lanes": [
                {"centerline": lane.centerline.tolist(), "width": lane.width,
                 "crossable_left": lane.crossable_left, "crossable_right": lane.crossable_right}
                for lane in self.lane_map.lanes
            ],
            "shoulders": [sh.tolist() for sh in self.lane_map.shoulders],
            "obstacles": [
                {"id": ob.obstacle_id, "polygon": ob.footprint.tolist(),
                 "ground_truth": ob.ground_truth}
                for ob in self.obstacles
            ],
            "ego_start": {"progress": self.start_progress, "speed": self.start_speed},
            "route": {"lane": self.route_lane, "goal_progress": self.goal_progress},
            "params": self.params.to_json(),
            "vehicle": {
                "body_radius": self.vehicle.body_radius,
                "wheelbase": self.vehicle.wheelbase,
                "accel_max": self.vehicle.accel_max,
                "steer_max": self.vehicle.steer_max,
                "progress_rate_max": self.vehicle.progress_rate_max,
            },
        }

    @staticmethod
    def from_json(doc: dict) -> "Scenario":
        if doc.get("version") != SCHEMA_VERSION:
            raise UnknownScenario(f"unsupported scenario schema version {doc.get('version')}")
        lanes = tuple(
            Lane(centerline=np.asarray(l["centerline"], dtype=float), width=float(l["width"]),
                 crossable_left=bool(l.get("crossable_left", False)),
                 crossable_right=bool(l.get("crossable_right", False)))
            for l in doc["lanes"]
        )
        shoulders = tuple(np.asarray(s, dtype=float) for s in doc.get("shoulders", []))
        obstacles = tuple(
            Obstacle(obstacle_id=o["id"], footprint=np.asarray(o["polygon"], dtype=float),
                     ground_truth=o.get("ground_truth", GROUND_TRUTH_BLOCKING))
            for o in doc.get("obstacles", [])
        )
        scenario = Scenario(
            name=doc["name"],
            lane_map=LaneMap(lanes=lanes, shoulders=shoulders),
            obstacles=obstacles,
            route_lane=int(doc["route"]["lane"]),
            start_progress=float(doc["ego_start"]["progress"]),
            start_speed=float(doc["ego_start"].get("speed", 0.0)),
            goal_progress=float(doc["route"]["goal_progress"]),
            params=SimParams.from_json(doc.get("params", {})),
            vehicle=VehicleParams(**doc.get("vehicle", {})),
        )
        scenario.validate()
        return scenario


class Perception:
    """Perception stub: every obstacle footprint is reported as blocking the
    road wherever the corridor cannot pass it.

    Lane-edge bounds and obstacle carving are static for a scenario and
    precomputed; only the stop limit depends on the ego progress (obstacles
    already entered or passed no longer stop the vehicle).
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.path = scenario.reference_path()
        lane = scenario.lane_map.lanes[scenario.route_lane]
        half = lane.width / 2.0
        self.lane_corridor = uniform_corridor(
            self.path, half, -half, spacing=scenario.params.corridor_spacing)
        self.min_band_width = 2.0 * scenario.vehicle.body_radius + WIDTH_MARGIN
        self._footprints = [ob.footprint for ob in scenario.obstacles]
        self._carved, self._blocked = carve_obstacles(
            self.lane_corridor, self.path, self._footprints, self.min_band_width)

    def obstacle_footprints(self, world: WorldState):
        return tuple((ob.obstacle_id, ob.footprint) for ob in world.obstacles)

    def stop_from_blocked(self, blocked, ego_progress: float) -> float | None:
        """Stop limit from the nearest blocking obstacle still ahead."""
        candidates = [b.entry_theta - self.scenario.params.standoff
                      for b in blocked if b.entry_theta >= ego_progress]
        if not candidates:
            return None
        return max(min(candidates), ego_progress)

    def perceive(self, world: WorldState, active_behavior: str | None = None) -> EnvironmentModel:
        stop = self.stop_from_blocked(self._blocked, world.ego.progress)
        corridor = replace(self._carved, stop_progress=stop)
        return EnvironmentModel(
            ego=world.ego,
            obstacle_footprints=self.obstacle_footprints(world),
            corridor=corridor,
            lane_corridor=self.lane_corridor,
            active_behavior=active_behavior,
        )


def step(world: WorldState, command, dt: float, v_eps: float) -> WorldState:
    """Advance the world one tick under perfect trajectory tracking."""
    if isinstance(command, TrajectoryCommand):
        ego = command.trajectory.state_at(world.t + dt)
    elif isinstance(command, StandstillCommand):
        ego = world.ego
    else:
        raise TypeError(f"unknown command {command!r}")
    standstill = world.standstill_time + dt if ego.speed <= v_eps else 0.0
    return WorldState(t=world.t + dt, ego=ego, obstacles=world.obstacles,
                      standstill_time=standstill)


# --- bundled scenarios -------------------------------------------------------

def _base_centerline() -> np.ndarray:
    """Straight section, a gentle left arc, then a final straight."""
    first = straight_path(60.0, spacing=0.5)
    arc = arc_path(40.0, np.pi / 4.0, spacing=0.5, start=(60.0, 0.0), heading=0.0)
    end = arc.vertices[-1]
    tail = straight_path(30.0, spacing=0.5, start=tuple(end), heading=np.pi / 4.0)
    return np.vstack((first.vertices, arc.vertices[1:], tail.vertices[1:]))


def _base_map() -> LaneMap:
    lane = Lane(centerline=_base_centerline(), width=4.0,
                crossable_left=False, crossable_right=False)
    shoulder = np.array([[18.0, -2.0], [58.0, -2.0], [58.0, -5.5], [18.0, -5.5]])
    return LaneMap(lanes=(lane,), shoulders=(shoulder,))


def _scenario_a() -> Scenario:
    manhole = Obstacle(
        obstacle_id="manhole-cover",
        footprint=np.array([[30.0, -0.5], [31.0, -0.5], [31.0, 0.5], [30.0, 0.5]]),
        ground_truth=GROUND_TRUTH_IGNORABLE,
    )
    return Scenario(
        name="A",
        lane_map=_base_map(),
        obstacles=(manhole,),
        route_lane=0,
        start_progress=10.0,
        start_speed=5.0,
        goal_progress=100.0,
    )


def _scenario_b() -> Scenario:
    barrier = Obstacle(
        obstacle_id="concrete-barrier",
        footprint=np.array([[30.0, 2.0], [38.0, 2.0], [38.0, -1.8]]),
        ground_truth=GROUND_TRUTH_BLOCKING,
    )
    return Scenario(
        name="B",
        lane_map=_base_map(),
        obstacles=(barrier,),
        route_lane=0,
        start_progress=10.0,
        start_speed=5.0,
        goal_progress=100.0,
    )


_BUILTIN = {"A": _scenario_a, "B": _scenario_b}


def load_scenario(name: str) -> Scenario:
    """Load a bundled scenario by name or a custom scenario from a JSON file."""
    if name in _BUILTIN:
        scenario = _BUILTIN[name]()
        scenario.validate()
        return scenario
    try:
        with open(name, "r", encoding="utf-8") as fh:
            return Scenario.from_json(json.load(fh))
    except FileNotFoundError:
        raise UnknownScenario(f"no such scenario: {name!r}") from None


def save_scenario(scenario: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario.to_json(), fh, indent=2)
        fh.write("\n")
