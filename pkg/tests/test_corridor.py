import numpy as np
import pytest

from teleassist.corridor import (Corridor, RejectedModification,
                                 apply_lateral_modification,
                                 apply_longitudinal_modification, band_polygon,
                                 carve_obstacles, uniform_corridor)
from teleassist.mpcc import lateral_constraints, longitudinal_constraint
from teleassist.vehicle import VehicleState

from conftest import state_on
from oracles import disc_in_band

MIN_WIDTH = 2.05  # two body radii plus the width margin


def test_corridor_validation():
    with pytest.raises(ValueError):
        Corridor(np.array([0.0, 1.0]), np.array([1.0, 1.0]), np.array([2.0, 2.0]))
    with pytest.raises(ValueError):
        Corridor(np.array([0.0, 0.0]), np.array([1.0, 1.0]), np.array([-1.0, -1.0]))


def test_lateral_constraints_centered(straight, wide_corridor):
    state = VehicleState(x=10.0, y=0.0, heading=0.0, speed=0.0, progress=10.0)
    g_left, g_right = lateral_constraints(state, straight, wide_corridor, 1.0)
    assert g_left == pytest.approx(-1.0, abs=1e-12)
    assert g_right == pytest.approx(-1.0, abs=1e-12)


def test_lateral_constraints_left_violation(straight, wide_corridor):
    # offset 1.5 with radius 1 pokes 0.5 out of the left bound; the right
    # margin grows by the same amount
    state = VehicleState(x=10.0, y=1.5, heading=0.0, speed=0.0, progress=10.0)
    g_left, g_right = lateral_constraints(state, straight, wide_corridor, 1.0)
    assert g_left == pytest.approx(0.5, abs=1e-12)
    assert g_right == pytest.approx(-2.5, abs=1e-12)


def test_lateral_constraint_sign_matches_geometry(straight, wide_corridor):
    rng = np.random.default_rng(3)
    for _ in range(40):
        theta = rng.uniform(3.0, straight.length - 3.0)
        offset = rng.uniform(-2.5, 2.5)
        state = state_on(straight, theta, offset)
        g_left, g_right = lateral_constraints(state, straight, wide_corridor, 1.0)
        inside = disc_in_band(straight, wide_corridor, (state.x, state.y), 1.0)
        margin = max(g_left, g_right)
        if abs(margin) > 2e-3:  # boundary-sampling tolerance of the oracle
            assert inside == (margin < 0)


def test_longitudinal_constraint_values():
    state = VehicleState(0, 0, 0, 0, progress=4.0)
    assert longitudinal_constraint(state, 10.0) == pytest.approx(-6.0)
    assert longitudinal_constraint(state.__class__(0, 0, 0, 0, 10.0), 10.0) == 0.0
    assert longitudinal_constraint(state.__class__(0, 0, 0, 0, 12.0), 10.0) == pytest.approx(2.0)
    assert longitudinal_constraint(state, None) == -np.inf


def test_union_with_contained_polygon_is_identity(straight, wide_corridor):
    poly = [[10.0, -1.0], [14.0, -1.0], [14.0, 1.0], [10.0, 1.0]]
    out = apply_lateral_modification(wide_corridor, straight, poly, MIN_WIDTH)
    assert np.allclose(out.left, wide_corridor.left, atol=1e-9)
    assert np.allclose(out.right, wide_corridor.right, atol=1e-9)


def test_union_rectangle_widens_exactly(straight, wide_corridor):
    # rectangle overlapping the band and extending 2 m to the right over [10, 20]
    poly = [[10.0, -4.0], [20.0, -4.0], [20.0, -1.0], [10.0, -1.0]]
    out = apply_lateral_modification(wide_corridor, straight, poly, MIN_WIDTH)
    inside = (out.thetas >= 10.0) & (out.thetas <= 20.0)
    assert np.allclose(out.right[inside], -4.0, atol=1e-9)
    assert np.allclose(out.right[~inside], -2.0, atol=1e-9)
    assert np.allclose(out.left, 2.0, atol=1e-9)
    assert out.stop_progress == wide_corridor.stop_progress


def test_union_never_shrinks_band(straight, wide_corridor):
    rng = np.random.default_rng(5)
    for _ in range(15):
        cx = rng.uniform(5.0, 35.0)
        w = rng.uniform(2.0, 8.0)
        y0 = rng.uniform(-5.0, 1.0)
        y1 = y0 + rng.uniform(1.0, 4.0)
        poly = [[cx - w / 2, y0], [cx + w / 2, y0], [cx + w / 2, y1], [cx - w / 2, y1]]
        try:
            out = apply_lateral_modification(wide_corridor, straight, poly, MIN_WIDTH)
        except RejectedModification:
            continue
        assert np.all(out.left >= wide_corridor.left - 1e-12)
        assert np.all(out.right <= wide_corridor.right + 1e-12)


def test_union_rejects_detached_polygon(straight, wide_corridor):
    poly = [[10.0, -8.0], [14.0, -8.0], [14.0, -5.0], [10.0, -5.0]]
    with pytest.raises(RejectedModification):
        apply_lateral_modification(wide_corridor, straight, poly, MIN_WIDTH)


def test_union_rejects_degenerate_polygons(straight, wide_corridor):
    with pytest.raises(RejectedModification):
        apply_lateral_modification(wide_corridor, straight, [[0, 0], [1, 0]], MIN_WIDTH)
    bowtie = [[10.0, -1.0], [12.0, 1.0], [10.0, 1.0], [12.0, -1.0]]
    with pytest.raises(RejectedModification):
        apply_lateral_modification(wide_corridor, straight, bowtie, MIN_WIDTH)


def test_longitudinal_modification_roundtrip(wide_corridor):
    limited = apply_longitudinal_modification(wide_corridor, 32.0)
    assert limited.stop_progress == 32.0
    assert np.array_equal(limited.left, wide_corridor.left)
    lifted = apply_longitudinal_modification(limited, None)
    assert lifted.stop_progress is None
    back = apply_longitudinal_modification(lifted, 32.0)
    assert back == limited or back.stop_progress == limited.stop_progress


def test_longitudinal_modification_validates_domain(wide_corridor):
    with pytest.raises(RejectedModification):
        apply_longitudinal_modification(wide_corridor, 1e6)
    with pytest.raises(RejectedModification):
        apply_longitudinal_modification(wide_corridor, -1.0)


def test_carve_blocking_obstacle(straight, wide_corridor):
    # spans the whole lane: no passable side
    fp = np.array([[30.0, -2.2], [32.0, -2.2], [32.0, 2.2], [30.0, 2.2]])
    carved, blocked = carve_obstacles(wide_corridor, straight, [fp], MIN_WIDTH)
    assert len(blocked) == 1
    assert blocked[0].entry_theta == pytest.approx(30.0, abs=1e-6)
    assert np.array_equal(carved.left, wide_corridor.left)


def test_carve_passable_obstacle_narrows_band(straight, wide_corridor):
    # obstacle hugging the left edge leaves a passable right side
    fp = np.array([[20.0, 0.5], [24.0, 0.5], [24.0, 2.0], [20.0, 2.0]])
    carved, blocked = carve_obstacles(wide_corridor, straight, [fp], 2.05)
    assert blocked == []
    span = (wide_corridor.thetas >= 20.0) & (wide_corridor.thetas <= 24.0)
    assert np.allclose(carved.left[span], 0.5, atol=1e-9)
    assert np.allclose(carved.left[~span], 2.0, atol=1e-9)


def test_carve_ignores_obstacle_outside_band(straight, wide_corridor):
    fp = np.array([[20.0, 3.0], [24.0, 3.0], [24.0, 5.0], [20.0, 5.0]])
    carved, blocked = carve_obstacles(wide_corridor, straight, [fp], MIN_WIDTH)
    assert blocked == []
    assert np.array_equal(carved.left, wide_corridor.left)


def test_band_polygon_area(straight, wide_corridor):
    band = band_polygon(wide_corridor, straight)
    assert band.area == pytest.approx(straight.length * 4.0, rel=1e-6)


def test_corridor_json_roundtrip(wide_corridor):
    doc = wide_corridor.to_json()
    back = Corridor.from_json(doc)
    assert np.array_equal(back.thetas, wide_corridor.thetas)
    assert np.array_equal(back.left, wide_corridor.left)
    assert back.stop_progress is None
