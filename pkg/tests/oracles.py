"""Independent reference computations the tests check the library against.

Everything here re-derives results from the documented contracts (brute
force, fine integration, exhaustive enumeration, plain geometry) without
going through the code paths under test.
"""

import numpy as np
from shapely.geometry import Point, Polygon

from teleassist.mpcc import build_cost_anchor


def dense_projection(path, position, samples: int = 10_000):
    """Brute-force nearest point by dense sampling of the arc length."""
    thetas = np.linspace(0.0, path.length, samples)
    pts = path.point_at(thetas)
    d2 = np.sum((pts - np.asarray(position)[None, :]) ** 2, axis=1)
    i = int(np.argmin(d2))
    return float(thetas[i]), float(np.sqrt(d2[i]))


def rk4_fine(state, inp, dt, wheelbase, substeps: int = 100):
    """Fine RK4 integration of the documented continuous dynamics with the
    speed clamped at zero from below."""

    def f(x):
        v = max(x[3], 0.0)
        return np.array([
            v * np.cos(x[2]),
            v * np.sin(x[2]),
            (v / wheelbase) * np.tan(inp[1]),
            inp[0],
            inp[2],
        ])

    x = np.asarray(state, dtype=float).copy()
    h = dt / substeps
    for _ in range(substeps):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        x[3] = max(x[3], 0.0)
    return x


def disc_in_band(path, corridor, position, radius, samples: int = 20_000):
    """Geometric check that the disc fits between the corridor boundary
    polylines, via dense boundary sampling."""
    thetas = np.linspace(corridor.thetas[0], corridor.thetas[-1], samples)
    pts = path.point_at(thetas)
    normals = path.normal_at(thetas)
    left_pts = pts + corridor.left_at(thetas)[:, None] * normals
    right_pts = pts + corridor.right_at(thetas)[:, None] * normals
    band = Polygon(np.vstack((left_pts, right_pts[::-1])))
    return band.contains(Point(position).buffer(radius, quad_segs=32))


# --- exhaustive grid search over short-horizon problems ------------------------


def _midpoint_components(x, y, psi, v, th, a, tan_d, r, dt, wheelbase):
    v1 = np.maximum(v, 0.0)
    mpsi = psi + 0.5 * dt * (v1 / wheelbase) * tan_d
    mv = v + 0.5 * dt * a
    mv1 = np.maximum(mv, 0.0)
    nx = x + dt * mv1 * np.cos(mpsi)
    ny = y + dt * mv1 * np.sin(mpsi)
    npsi = psi + dt * (mv1 / wheelbase) * tan_d
    nv = np.maximum(v + dt * a, 0.0)
    nth = th + dt * r
    return nx, ny, npsi, nv, nth


def _step_components(x, y, psi, v, th, a, d, r, dt, wheelbase):
    """Vectorized integration step on component arrays: the documented
    discrete model is explicit midpoint split into two substeps."""
    state = (x, y, psi, v, th)
    tan_d = np.tan(d)
    for _ in range(2):
        state = _midpoint_components(*state, a, tan_d, r, dt / 2.0, wheelbase)
    return state


def _stage_errors(path, x, y, th):
    pts, tangents, normals, _, _ = path.frames_at(th)
    relx = x - pts[:, 0]
    rely = y - pts[:, 1]
    e_c = normals[:, 0] * relx + normals[:, 1] * rely
    e_l = tangents[:, 0] * relx + tangents[:, 1] * rely
    return e_c, e_l


def grid_oracle(problem, values_per_dim: int = 5):
    """Exhaustive enumeration of every input sequence on a uniform grid.

    Returns (best feasible objective or None, best input sequence or None).
    Implements the planner's documented cost and constraint definitions
    directly on its own rollout.
    """
    cfg = problem.config
    veh = problem.vehicle
    path = problem.path
    cor = problem.corridor
    n = cfg.horizon
    dt = cfg.dt
    radius = veh.body_radius
    stop = path.length if cor.stop_progress is None else min(cor.stop_progress, path.length)
    brake = cfg.brake_margin * veh.accel_max
    anchor_values = build_cost_anchor(cor, radius)
    w = problem.weights
    prev = problem.previous_input
    u_prev = np.array([prev.accel, prev.steer, prev.progress_rate]) if prev else np.zeros(3)

    a_vals = np.linspace(-veh.accel_max, veh.accel_max, values_per_dim)
    d_vals = np.linspace(-veh.steer_max, veh.steer_max, values_per_dim)
    r_vals = np.linspace(0.0, veh.progress_rate_max, values_per_dim)
    aa, dd, rr = np.meshgrid(a_vals, d_vals, r_vals, indexing="ij")
    combos = np.column_stack((aa.ravel(), dd.ravel(), rr.ravel()))  # (125, 3)
    m = len(combos)

    def stage_feasible_and_cost(x, y, psi, v, th):
        e_c, e_l = _stage_errors(path, x, y, th)
        g_left = -cor.left_at(th) + radius + e_c
        g_right = cor.right_at(th) + radius - e_c
        g_stop = th - stop
        dist = stop - cfg.stop_margin - th
        g_brake = v ** 2 - 2.0 * brake * np.maximum(dist, 0.0)
        ok = (g_left <= 0) & (g_right <= 0) & (g_stop <= 0) & (g_brake <= 0)
        anchor = np.interp(th, cor.thetas, anchor_values)
        cost = w.contour * (e_c - anchor) ** 2 + w.lag * e_l ** 2
        return ok, cost

    x0 = problem.initial_state
    e_c0, e_l0 = _stage_errors(path, np.array([x0.x]), np.array([x0.y]),
                               np.array([x0.progress]))
    anchor0 = np.interp(x0.progress, cor.thetas, anchor_values)
    base_cost = float(w.contour * (e_c0[0] - anchor0) ** 2 + w.lag * e_l0[0] ** 2)

    # stage 1: one state, m successors; flat encodes the input sequence in
    # base m with the latest stage as the least significant digit. A branch
    # with an infeasible prefix can never become feasible again, so pruning
    # after every stage keeps the enumeration exact.
    x = np.full(m, x0.x)
    y = np.full(m, x0.y)
    psi = np.full(m, x0.heading)
    v = np.full(m, x0.speed)
    th = np.full(m, x0.progress)
    states = _step_components(x, y, psi, v, th,
                              combos[:, 0], combos[:, 1], combos[:, 2], dt, veh.wheelbase)
    ok, cost = stage_feasible_and_cost(*states)
    rate = np.sum((combos - u_prev[None, :]) ** 2, axis=1)
    total = base_cost + cost + w.smooth * rate - w.progress * dt * combos[:, 2]
    flat = np.arange(m)
    keep = np.flatnonzero(ok)
    states = tuple(comp[keep] for comp in states)
    total = total[keep]
    flat = flat[keep]

    for _ in range(1, n):
        if flat.size == 0:
            return None, None
        k = flat.size
        parent = np.repeat(np.arange(k), m)
        child = np.tile(np.arange(m), k)
        prev_u = combos[flat[parent] % m]
        u = combos[child]
        expanded = [comp[parent] for comp in states]
        states = _step_components(expanded[0], expanded[1], expanded[2],
                                  expanded[3], expanded[4],
                                  u[:, 0], u[:, 1], u[:, 2], dt, veh.wheelbase)
        ok, cost = stage_feasible_and_cost(*states)
        total = (total[parent] + cost + w.smooth * np.sum((u - prev_u) ** 2, axis=1)
                 - w.progress * dt * u[:, 2])
        flat = flat[parent] * m + child
        keep = np.flatnonzero(ok)
        states = tuple(comp[keep] for comp in states)
        total = total[keep]
        flat = flat[keep]

    if flat.size == 0:
        return None, None
    best = int(np.argmin(total))
    flat_idx = int(flat[best])
    inputs = []
    for _ in range(n):
        inputs.append(combos[flat_idx % m])
        flat_idx //= m
    inputs.reverse()
    return float(total[best]), np.array(inputs)


def evaluate_inputs(problem, inputs):
    """Objective and worst constraint value of an input sequence, computed
    with the oracle's own rollout and cost formula."""
    cfg = problem.config
    veh = problem.vehicle
    path = problem.path
    cor = problem.corridor
    dt = cfg.dt
    radius = veh.body_radius
    stop = path.length if cor.stop_progress is None else min(cor.stop_progress, path.length)
    brake = cfg.brake_margin * veh.accel_max
    anchor_values = build_cost_anchor(cor, radius)
    w = problem.weights
    prev = problem.previous_input
    u_prev = np.array([prev.accel, prev.steer, prev.progress_rate]) if prev else np.zeros(3)

    x0 = problem.initial_state
    state = np.array([x0.x, x0.y, x0.heading, x0.speed, x0.progress])
    states = [state]
    for u in inputs:
        comps = _step_components(*(np.array([c]) for c in state), u[0], u[1], u[2],
                                 dt, veh.wheelbase)
        state = np.array([c[0] for c in comps])
        states.append(state)
    arr = np.array(states)
    e_c, e_l = _stage_errors(path, arr[:, 0], arr[:, 1], arr[:, 4])
    anchor = np.interp(arr[:, 4], cor.thetas, anchor_values)
    cost = float(np.sum(w.contour * (e_c - anchor) ** 2 + w.lag * e_l ** 2))
    du = np.diff(np.vstack((u_prev, np.asarray(inputs))), axis=0)
    cost += float(w.smooth * np.sum(du ** 2))
    cost -= float(w.progress * dt * np.sum(np.asarray(inputs)[:, 2]))

    th = arr[1:, 4]
    vv = arr[1:, 3]
    g_left = -cor.left_at(th) + radius + e_c[1:]
    g_right = cor.right_at(th) + radius - e_c[1:]
    g_stop = th - stop
    dist = stop - cfg.stop_margin - th
    g_brake = vv ** 2 - 2.0 * brake * np.maximum(dist, 0.0)
    worst = float(max(g_left.max(), g_right.max(), g_stop.max(), g_brake.max()))
    return cost, worst
