import numpy as np
import pytest

from teleassist.corridor import uniform_corridor
from teleassist.path import ReferencePath, arc_path, straight_path
from teleassist.vehicle import VehicleParams, VehicleState
from teleassist.world import Lane, LaneMap, Obstacle, Scenario, SimParams


@pytest.fixture
def straight():
    return straight_path(40.0, spacing=1.0)


@pytest.fixture
def arc():
    # dense sampling keeps the interpolated heading close to the true arc
    return arc_path(radius=20.0, angle=np.pi / 2.0, spacing=0.2)


@pytest.fixture
def wide_corridor(straight):
    return uniform_corridor(straight, 2.0, -2.0)


def state_on(path: ReferencePath, theta: float, offset: float = 0.0,
             speed: float = 0.0) -> VehicleState:
    frame = path.frame_at(theta)
    pos = frame.point + offset * frame.normal
    heading = float(np.arctan2(frame.tangent[1], frame.tangent[0]))
    return VehicleState(x=float(pos[0]), y=float(pos[1]), heading=heading,
                        speed=speed, progress=theta)


def mini_scenario(obstacle_entry: float = 30.0, invocation: float = 2.0,
                  goal: float = 48.0) -> Scenario:
    """Short straight-lane scenario for fast end-to-end tests."""
    centerline = np.column_stack((np.linspace(0.0, 60.0, 121), np.zeros(121)))
    lane = Lane(centerline=centerline, width=4.0)
    block = Obstacle(
        obstacle_id="block",
        footprint=np.array([[obstacle_entry, -2.2], [obstacle_entry + 2.0, -2.2],
                            [obstacle_entry + 2.0, 2.2], [obstacle_entry, 2.2]]),
    )
    return Scenario(
        name="mini",
        lane_map=LaneMap(lanes=(lane,)),
        obstacles=(block,),
        route_lane=0,
        start_progress=10.0,
        start_speed=5.0,
        goal_progress=goal,
        params=SimParams(invocation_standstill=invocation),
        vehicle=VehicleParams(),
    )
