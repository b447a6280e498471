"""Contouring-control trajectory planner.

Plans over a fixed horizon by maximizing progress along the reference path
while penalizing lateral (contouring) and longitudinal (lag) deviation.
Inequality constraints keep a disc of the vehicle's body radius inside the
corridor band, keep progress below the stop limit, and bound speed by the
braking envelope of the stop limit so that a bounded stop limit means an
actual stop at the line.

The lateral cost term is measured from an anchor line: the path offset
clipped into the admissible offset interval [right bound + radius + margin,
left bound - radius - margin] and smoothed to a bounded lateral slope so
the vehicle can actually track it. On a clear lane the anchor is the
reference path itself; where the band is carved or widened it becomes a
trackable swerve through the granted space, so passing an obstacle there
stays affordable over the whole maneuver including the return leg.
Constraint errors are always anchored to the reference path, matching the
sign convention of the bound functions.

The nonlinear program is solved by repeated linearization: an augmented-
Lagrangian outer loop around damped active-set Gauss-Newton steps on the
single-shooting (input-only) parametrization, so returned trajectories
satisfy the dynamics exactly by construction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .corridor import Corridor
from .path import ReferencePath
from .vehicle import (NU, NX, ControlInput, VehicleParams, VehicleState,
                      step_jacobians_batch, step_scalar)

log = logging.getLogger(__name__)


class InfeasibleError(Exception):
    """No iterate satisfied the constraints within tolerance."""


@dataclass(frozen=True)
class PlannerWeights:
    contour: float = 5.0
    lag: float = 10.0
    progress: float = 1.0
    smooth: float = 0.1

    def __post_init__(self):
        if min(self.contour, self.lag, self.progress, self.smooth) < 0:
            raise ValueError("weights must be non-negative")


@dataclass(frozen=True)
class PlannerConfig:
    horizon: int = 30
    dt: float = 0.2
    max_iterations: int = 50      # outer linearize-and-solve passes
    cost_tol: float = 1e-6        # stop when the cost decrease falls below this
    constraint_tol: float = 1e-4
    dynamics_tol: float = 1e-6
    max_inner: int = 30
    brake_margin: float = 0.8     # fraction of max accel assumed available to brake
    stop_margin: float = 0.005    # zero-speed plateau distance before the stop limit

    def __post_init__(self):
        if self.horizon < 1 or self.dt <= 0:
            raise ValueError("horizon must be >= 1 and dt positive")


@dataclass(frozen=True)
class MpccProblem:
    path: ReferencePath
    corridor: Corridor
    initial_state: VehicleState
    weights: PlannerWeights = PlannerWeights()
    config: PlannerConfig = PlannerConfig()
    vehicle: VehicleParams = VehicleParams()
    start_time: float = 0.0
    previous_input: ControlInput | None = None

    def __post_init__(self):
        if self.vehicle.body_radius <= 0:
            raise ValueError("body radius must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Planned motion: stamped states for every stage plus the applied
    inputs, the objective value and the per-stage constraint values."""

    times: np.ndarray            # (N+1,)
    states: list[VehicleState]   # N+1 entries
    inputs: list[ControlInput]   # N entries
    objective: float
    slack_left: np.ndarray       # (N+1,) lateral constraint values, <= 0 ok
    slack_right: np.ndarray
    slack_stop: np.ndarray       # -inf when the stop limit is unbounded
    slack_brake: np.ndarray      # braking-envelope constraint values

    def end_time(self) -> float:
        return float(self.times[-1])

    def state_at(self, t: float) -> VehicleState:
        """Linear interpolation between stamped states, clamped at the ends."""
        times = self.times
        if t <= times[0]:
            return self.states[0]
        if t >= times[-1]:
            return self.states[-1]
        i = int(np.searchsorted(times, t, side="right")) - 1
        a, b = self.states[i], self.states[i + 1]
        w = (t - times[i]) / (times[i + 1] - times[i])
        dpsi = np.arctan2(np.sin(b.heading - a.heading), np.cos(b.heading - a.heading))
        return VehicleState(
            x=a.x + w * (b.x - a.x),
            y=a.y + w * (b.y - a.y),
            heading=a.heading + w * dpsi,
            speed=a.speed + w * (b.speed - a.speed),
            progress=a.progress + w * (b.progress - a.progress),
        )

    def shifted(self, t0: float) -> "Trajectory":
        """Same motion re-anchored to start at time t0."""
        return Trajectory(
            times=self.times - self.times[0] + t0,
            states=self.states,
            inputs=self.inputs,
            objective=self.objective,
            slack_left=self.slack_left,
            slack_right=self.slack_right,
            slack_stop=self.slack_stop,
            slack_brake=self.slack_brake,
        )

    def input_array(self) -> np.ndarray:
        return np.array([u.as_array() for u in self.inputs])

    def to_json(self) -> dict:
        return {
            "states": [
                {"t": float(t), "x": s.x, "y": s.y, "heading": s.heading,
                 "speed": s.speed, "progress": s.progress}
                for t, s in zip(self.times, self.states)
            ],
            "inputs": [
                {"accel": u.accel, "steer": u.steer, "progress_rate": u.progress_rate}
                for u in self.inputs
            ],
            "objective": self.objective,
        }

    @staticmethod
    def from_json(doc: dict) -> "Trajectory":
        states = [VehicleState(d["x"], d["y"], d["heading"], d["speed"], d["progress"])
                  for d in doc["states"]]
        times = np.array([d["t"] for d in doc["states"]], dtype=float)
        inputs = [ControlInput(d["accel"], d["steer"], d["progress_rate"])
                  for d in doc["inputs"]]
        n = len(states)
        empty = np.full(n, -np.inf)
        return Trajectory(times, states, inputs, float(doc.get("objective", 0.0)),
                          empty.copy(), empty.copy(), empty.copy(), empty.copy())


# --- stage quantities -------------------------------------------------------

def contouring_error(state: VehicleState, path: ReferencePath) -> float:
    """Signed distance from the vehicle center to the path tangent line
    anchored at the path point of the state's progress (positive left)."""
    frame = path.frame_at(state.progress)
    return float(np.dot(frame.normal, state.position() - frame.point))


def lag_error(state: VehicleState, path: ReferencePath) -> float:
    """Longitudinal mismatch between the vehicle center and the path point
    at the state's progress."""
    frame = path.frame_at(state.progress)
    return float(np.dot(frame.tangent, state.position() - frame.point))


def _stage_terms(X: np.ndarray, path: ReferencePath):
    """Vectorized contouring/lag errors and their state gradients for a
    whole batch of states (rows of X)."""
    pts, tangents, normals, curvature, seg_dir = path.frames_at(X[:, 4])
    rel = X[:, 0:2] - pts
    e_c = np.einsum("ij,ij->i", normals, rel)
    e_l = np.einsum("ij,ij->i", tangents, rel)
    n_dot_u = np.einsum("ij,ij->i", normals, seg_dir)
    t_dot_u = np.einsum("ij,ij->i", tangents, seg_dir)
    m = X.shape[0]
    g_c = np.zeros((m, NX))
    g_c[:, 0:2] = normals
    g_c[:, 4] = -curvature * e_l - n_dot_u
    g_l = np.zeros((m, NX))
    g_l[:, 0:2] = tangents
    g_l[:, 4] = curvature * e_c - t_dot_u
    return e_c, e_l, g_c, g_l


def contouring_error_gradient(state: VehicleState, path: ReferencePath) -> np.ndarray:
    return _stage_terms(state.as_array()[None, :], path)[2][0]


def lag_error_gradient(state: VehicleState, path: ReferencePath) -> np.ndarray:
    return _stage_terms(state.as_array()[None, :], path)[3][0]


def lateral_constraints(state: VehicleState, path: ReferencePath, corridor: Corridor,
                        body_radius: float) -> tuple[float, float]:
    """Left and right corridor constraint values; both <= 0 iff the body
    disc at the contouring-error offset stays within the bounds."""
    e_c = contouring_error(state, path)
    theta = state.progress
    g_left = -float(corridor.left_at(theta)) + body_radius + e_c
    g_right = float(corridor.right_at(theta)) + body_radius - e_c
    return g_left, g_right


def longitudinal_constraint(state: VehicleState, stop_progress: float | None) -> float:
    """Progress beyond the stop limit; never active when unbounded."""
    if stop_progress is None:
        return -np.inf
    return state.progress - float(stop_progress)


# --- solver -----------------------------------------------------------------

class _Rollout:
    __slots__ = ("X", "S", "e_c", "e_l", "g_c", "g_l", "g", "G")

    def __init__(self, X, S, e_c, e_l, g_c, g_l, g, G):
        self.X = X
        self.S = S
        self.e_c = e_c
        self.e_l = e_l
        self.g_c = g_c
        self.g_l = g_l
        self.g = g
        self.G = G


# constraint rows per stage: left, right, stop, brake envelope
_NC = 4

# clearance beyond the body radius for the lateral cost anchor
COST_ANCHOR_MARGIN = 0.025
# bound on the anchor's lateral slope (m sideways per m of progress)
COST_ANCHOR_SLOPE = 0.3


def build_cost_anchor(corridor: Corridor, body_radius: float) -> np.ndarray:
    """Anchor offsets for the lateral cost term, one per corridor sample.

    Zero offset clipped into the admissible interval, then rate-limited by
    forward/backward passes so the anchor never demands a steeper lateral
    move than COST_ANCHOR_SLOPE; bound clipping wins over the rate limit
    where the band itself is narrower.
    """
    lo = corridor.right + body_radius + COST_ANCHOR_MARGIN
    hi = corridor.left - body_radius - COST_ANCHOR_MARGIN
    mid = 0.5 * (lo + hi)
    anchor = np.where(lo > hi, mid, np.minimum(np.maximum(0.0, lo), hi))
    steps = np.diff(corridor.thetas) * COST_ANCHOR_SLOPE
    m = len(anchor)
    for _ in range(2):
        for j in range(1, m):
            anchor[j] = min(max(anchor[j], anchor[j - 1] - steps[j - 1]),
                            anchor[j - 1] + steps[j - 1])
            anchor[j] = min(max(anchor[j], lo[j]), hi[j])
        for j in range(m - 2, -1, -1):
            anchor[j] = min(max(anchor[j], anchor[j + 1] - steps[j]),
                            anchor[j + 1] + steps[j])
            anchor[j] = min(max(anchor[j], lo[j]), hi[j])
    return anchor


class _Program:
    """Condensed single-shooting program for one problem instance."""

    def __init__(self, problem: MpccProblem):
        self.problem = problem
        self.n = problem.config.horizon
        self.dt = problem.config.dt
        self.x0 = problem.initial_state.as_array()
        self.lb = np.tile(problem.vehicle.input_lower(), self.n)
        self.ub = np.tile(problem.vehicle.input_upper(), self.n)
        prev = problem.previous_input or ControlInput(0.0, 0.0, 0.0)
        self.u_prev = prev.as_array()
        # the path end always acts as a stop limit so frames stay in-domain
        stop = problem.corridor.stop_progress
        self.stop = problem.path.length if stop is None else min(float(stop), problem.path.length)
        self.brake = problem.config.brake_margin * problem.vehicle.accel_max
        self.n_con = _NC * self.n
        self._anchor_values = build_cost_anchor(problem.corridor, problem.vehicle.body_radius)
        self._anchor_slopes = np.diff(self._anchor_values) / np.diff(problem.corridor.thetas)
        n, w = self.n, problem.weights
        # constant input-rate residual rows: sqrt(w_u) * (u_k - u_{k-1})
        d = np.eye(n * NU)
        d[NU:, :-NU] -= np.eye((n - 1) * NU)
        self.smooth_rows = np.sqrt(w.smooth) * d
        self.lin_grad = np.zeros(n * NU)
        self.lin_grad[2::NU] = -w.progress * self.dt

    def states(self, u_flat: np.ndarray) -> np.ndarray:
        """Roll the dynamics out over the horizon (scalar hot loop)."""
        n, dt = self.n, self.dt
        wheelbase = self.problem.vehicle.wheelbase
        U = u_flat.reshape(n, NU)
        X = np.empty((n + 1, NX))
        X[0] = self.x0
        cur = (self.x0[0], self.x0[1], self.x0[2], self.x0[3], self.x0[4])
        for k in range(n):
            cur = step_scalar(cur[0], cur[1], cur[2], cur[3], cur[4],
                              U[k, 0], U[k, 1], U[k, 2], dt, wheelbase)
            X[k + 1] = cur
        return X

    def _errors(self, X: np.ndarray):
        pts, tangents, normals, _, _ = self.problem.path.frames_at(X[:, 4])
        rel = X[:, 0:2] - pts
        return np.einsum("ij,ij->i", normals, rel), np.einsum("ij,ij->i", tangents, rel)

    def cost_anchor(self, theta: np.ndarray) -> np.ndarray:
        cor = self.problem.corridor
        return np.interp(theta, cor.thetas, self._anchor_values)

    def _cost_anchor_slope(self, theta: np.ndarray) -> np.ndarray:
        cor = self.problem.corridor
        idx = np.searchsorted(cor.thetas,
                              np.clip(theta, cor.thetas[0], cor.thetas[-1]),
                              side="right") - 1
        idx = np.clip(idx, 0, len(cor.thetas) - 2)
        return self._anchor_slopes[idx]

    def constraints(self, X: np.ndarray, e_c: np.ndarray) -> np.ndarray:
        cor = self.problem.corridor
        radius = self.problem.vehicle.body_radius
        theta = X[1:, 4]
        speed = X[1:, 3]
        g = np.empty(self.n_con)
        dist = self.stop - self.problem.config.stop_margin - theta
        g[0::_NC] = -cor.left_at(theta) + radius + e_c[1:]
        g[1::_NC] = cor.right_at(theta) + radius - e_c[1:]
        g[2::_NC] = theta - self.stop
        g[3::_NC] = speed ** 2 - 2.0 * self.brake * np.maximum(dist, 0.0)
        return g

    def rollout(self, u_flat: np.ndarray, with_sens: bool) -> _Rollout:
        n, dt = self.n, self.dt
        prob = self.problem
        wheelbase = prob.vehicle.wheelbase
        U = u_flat.reshape(n, NU)
        X = self.states(u_flat)
        S = None
        if with_sens:
            A, B = step_jacobians_batch(X[:-1], U, dt, wheelbase)
            S = np.zeros((n + 1, NX, n * NU))
            for k in range(n):
                S[k + 1] = A[k] @ S[k]
                S[k + 1][:, k * NU:(k + 1) * NU] += B[k]

        e_c, e_l, g_c, g_l = _stage_terms(X, prob.path)
        g = self.constraints(X, e_c)
        G = None
        if with_sens:
            cor = prob.corridor
            theta = X[1:, 4]
            speed = X[1:, 3]
            dist = self.stop - prob.config.stop_margin - theta
            s_tail = S[1:]
            rows_left = g_c[1:].copy()
            rows_left[:, 4] -= cor.left_slope_at(theta)
            rows_right = -g_c[1:]
            rows_right[:, 4] += cor.right_slope_at(theta)
            rows_brake = np.zeros((n, NX))
            rows_brake[:, 3] = 2.0 * speed
            rows_brake[:, 4] = np.where(dist > 0.0, 2.0 * self.brake, 0.0)
            G = np.empty((self.n_con, n * NU))
            G[0::_NC] = np.einsum("ki,kij->kj", rows_left, s_tail)
            G[1::_NC] = np.einsum("ki,kij->kj", rows_right, s_tail)
            G[2::_NC] = s_tail[:, 4, :]
            G[3::_NC] = np.einsum("ki,kij->kj", rows_brake, s_tail)
        return _Rollout(X, S, e_c, e_l, g_c, g_l, g, G)

    def cost_from(self, u_flat: np.ndarray, X: np.ndarray, e_c: np.ndarray,
                  e_l: np.ndarray) -> float:
        w = self.problem.weights
        U = u_flat.reshape(self.n, NU)
        du = np.diff(np.vstack((self.u_prev, U)), axis=0)
        lateral = e_c - self.cost_anchor(X[:, 4])
        return float(
            w.contour * np.sum(lateral ** 2)
            + w.lag * np.sum(e_l ** 2)
            - w.progress * self.dt * np.sum(U[:, 2])
            + w.smooth * np.sum(du ** 2)
        )

    def true_cost(self, u_flat: np.ndarray, data: _Rollout) -> float:
        return self.cost_from(u_flat, data.X, data.e_c, data.e_l)

    def merit(self, u_flat: np.ndarray, lam: np.ndarray, rho: float) -> float:
        X = self.states(u_flat)
        e_c, e_l = self._errors(X)
        j = self.cost_from(u_flat, X, e_c, e_l)
        g = self.constraints(X, e_c)
        act = np.maximum(0.0, g + lam / rho)
        return j + 0.5 * rho * float(np.sum(act ** 2)) - float(np.sum(lam ** 2)) / (2.0 * rho)

    def _linearize(self, u_flat, data: _Rollout, lam, rho):
        """Gauss-Newton residual stack and gradient of the augmented
        objective at the current rollout."""
        n = self.n
        w = self.problem.weights
        U = u_flat.reshape(n, NU)
        s_tail = data.S[1:]
        sc, sl = np.sqrt(w.contour), np.sqrt(w.lag)
        theta = data.X[1:, 4]
        rows_c = data.g_c[1:].copy()
        rows_c[:, 4] -= self._cost_anchor_slope(theta)
        jac_c = sc * np.einsum("ki,kij->kj", rows_c, s_tail)
        jac_l = sl * np.einsum("ki,kij->kj", data.g_l[1:], s_tail)
        res_c = sc * (data.e_c[1:] - self.cost_anchor(theta))
        res_l = sl * data.e_l[1:]
        du = np.diff(np.vstack((self.u_prev, U)), axis=0).reshape(-1)
        res_s = np.sqrt(w.smooth) * du
        shifted = data.g + lam / rho
        active = np.nonzero(shifted > 0.0)[0]
        sr = np.sqrt(0.5 * rho)
        jac = np.vstack((jac_c, jac_l, self.smooth_rows, sr * data.G[active]))
        res = np.concatenate((res_c, res_l, res_s, sr * shifted[active]))
        # the merit is sum(res^2) plus the linear progress term
        grad = 2.0 * (jac.T @ res) + self.lin_grad
        return jac, grad

    def _line_search(self, u, d, grad, phi, value_fn):
        """Backtracking search with quadratic interpolation along a
        projected direction. Returns (new u, new value, success flag)."""
        slope0 = float(grad @ d)
        alpha = 1.0
        for _ in range(10):
            u_try = np.clip(u + alpha * d, self.lb, self.ub)
            step = u_try - u
            if np.max(np.abs(step)) <= 1e-14:
                return u, phi, False
            slope = float(grad @ step)
            phi_try = value_fn(u_try)
            if phi_try <= phi + 1e-4 * min(slope, 0.0):
                return u_try, phi_try, True
            denom = phi_try - phi - slope0 * alpha
            if denom > 0.0 and slope0 < 0.0:
                alpha = max(0.1 * alpha, min(0.5 * alpha, -0.5 * slope0 * alpha * alpha / denom))
            else:
                alpha *= 0.25
        return u, phi, False

    def inner_minimize(self, u_flat, lam, rho, tol):
        cfg = self.problem.config
        u = u_flat
        phi = self.merit(u, lam, rho)
        damping = 1e-8
        value_fn = lambda v: self.merit(v, lam, rho)
        for _ in range(cfg.max_inner):
            data = self.rollout(u, with_sens=True)
            jac, grad = self._linearize(u, data, lam, rho)
            pg = u - np.clip(u - grad, self.lb, self.ub)
            if np.max(np.abs(pg)) <= tol:
                break
            # freeze variables pinned at a bound the gradient pushes against
            at_lb = (u - self.lb <= 1e-12) & (grad > 0.0)
            at_ub = (self.ub - u <= 1e-12) & (grad < 0.0)
            free = np.nonzero(~(at_lb | at_ub))[0]
            if free.size == 0:
                break
            jf = jac[:, free]
            h = 2.0 * (jf.T @ jf)
            h[np.diag_indices_from(h)] += damping + 1e-9
            try:
                df = np.linalg.solve(h, -grad[free])
            except np.linalg.LinAlgError:
                damping = max(damping * 100.0, 1e-4)
                continue
            d = np.zeros_like(u)
            d[free] = df
            u, phi, improved = self._line_search(u, d, grad, phi, value_fn)
            if improved:
                damping = max(damping * 0.25, 1e-8)
            else:
                damping *= 100.0
                if damping > 1e8:
                    break
        return u

    def feasibility_polish(self, u_flat):
        """Slack-relaxed recovery: minimize the squared constraint violation
        alone, ignoring the cost."""

        def score_fn(v):
            X = self.states(v)
            e_c, _ = self._errors(X)
            g = self.constraints(X, e_c)
            return float(np.sum(np.maximum(g, 0.0) ** 2))

        u = u_flat
        score = score_fn(u)
        for _ in range(self.problem.config.max_inner):
            if score <= 1e-14:
                break
            data = self.rollout(u, with_sens=True)
            active = np.nonzero(data.g > 0.0)[0]
            if active.size == 0:
                break
            jac = data.G[active]
            res = data.g[active]
            grad = 2.0 * (jac.T @ res)
            h = 2.0 * (jac.T @ jac)
            h[np.diag_indices_from(h)] += 1e-8
            d = np.linalg.solve(h, -grad)
            u, score, improved = self._line_search(u, d, grad, score, score_fn)
            if not improved:
                break
        return u


def default_warm_start(problem: MpccProblem) -> np.ndarray:
    """No-steer, hold-speed initial guess."""
    n = problem.config.horizon
    rate = float(np.clip(problem.initial_state.speed, 0.0, problem.vehicle.progress_rate_max))
    u = np.zeros((n, NU))
    u[:, 2] = rate
    return u.reshape(-1)


def _solve_impl(problem: MpccProblem, warm_inputs, warm_lambda):
    prog = _Program(problem)
    cfg = problem.config
    feas_target = 0.25 * cfg.constraint_tol

    # lateral/stop constraints at stage 0 only depend on the fixed initial
    # state; the braking envelope is excluded because later stages can still
    # recover from initial overspeed
    x0_state = problem.initial_state
    g0_l, g0_r = lateral_constraints(x0_state, problem.path, problem.corridor,
                                     problem.vehicle.body_radius)
    g0_lon = x0_state.progress - prog.stop
    if max(g0_l, g0_r, g0_lon) > cfg.constraint_tol:
        raise InfeasibleError("initial state violates the corridor constraints")

    if warm_inputs is not None and np.asarray(warm_inputs).size == prog.n * NU:
        u = np.clip(np.asarray(warm_inputs, dtype=float).reshape(-1), prog.lb, prog.ub)
    else:
        u = np.clip(default_warm_start(problem), prog.lb, prog.ub)
    if warm_lambda is not None and np.asarray(warm_lambda).size == prog.n_con:
        lam0 = np.maximum(np.asarray(warm_lambda, dtype=float).reshape(-1), 0.0)
    else:
        lam0 = np.zeros(prog.n_con)

    def al_loop(u, lam, rho, outers):
        j_prev = np.inf
        viol_prev = np.inf
        for _ in range(outers):
            tol = min(1e-6 * (1.0 + rho), 1e-3)
            u = prog.inner_minimize(u, lam, rho, tol)
            data = prog.rollout(u, with_sens=False)
            viol = float(np.max(np.maximum(data.g, 0.0), initial=0.0))
            j = prog.true_cost(u, data)
            if viol <= feas_target and abs(j_prev - j) < cfg.cost_tol:
                break
            lam = np.maximum(0.0, lam + rho * data.g)
            if viol > 0.25 * viol_prev and viol > feas_target:
                rho = min(rho * 8.0, 1e9)
            j_prev, viol_prev = j, viol
        return u, lam, rho

    u, lam, rho = al_loop(u, lam0, 10.0, cfg.max_iterations)
    data = prog.rollout(u, with_sens=False)
    viol = float(np.max(np.maximum(data.g, 0.0), initial=0.0))
    if viol > cfg.constraint_tol:
        u = prog.feasibility_polish(u)
        u, lam, _ = al_loop(u, np.zeros(prog.n_con), 100.0, max(10, cfg.max_iterations // 2))
        data = prog.rollout(u, with_sens=False)
        viol = float(np.max(np.maximum(data.g, 0.0), initial=0.0))
        if viol > cfg.constraint_tol:
            raise InfeasibleError(f"constraint violation {viol:.3e} after recovery")

    return _build_trajectory(problem, prog, u, data), u, lam


def solve(problem: MpccProblem, warm_start: np.ndarray | None = None) -> Trajectory:
    """Solve the planning problem; raises InfeasibleError when no iterate
    satisfies the constraints within tolerance after slack-relaxed recovery.

    The path end is treated as an implicit stop limit so the horizon never
    leaves the path domain.
    """
    return _solve_impl(problem, warm_start, None)[0]


def _build_trajectory(problem: MpccProblem, prog: _Program, u_flat, data: _Rollout) -> Trajectory:
    n = prog.n
    times = problem.start_time + prog.dt * np.arange(n + 1)
    states = [VehicleState.from_array(data.X[k]) for k in range(n + 1)]
    inputs = [ControlInput.from_array(row) for row in u_flat.reshape(n, NU)]
    cor = problem.corridor
    radius = problem.vehicle.body_radius
    theta = data.X[:, 4]
    speed = data.X[:, 3]
    slack_left = -cor.left_at(theta) + radius + data.e_c
    slack_right = cor.right_at(theta) + radius - data.e_c
    dist = prog.stop - problem.config.stop_margin - theta
    slack_brake = speed ** 2 - 2.0 * prog.brake * np.maximum(dist, 0.0)
    if cor.stop_progress is None:
        slack_stop = np.full(n + 1, -np.inf)
    else:
        slack_stop = theta - float(cor.stop_progress)
    return Trajectory(
        times=times,
        states=states,
        inputs=inputs,
        objective=prog.true_cost(u_flat, data),
        slack_left=slack_left,
        slack_right=slack_right,
        slack_stop=slack_stop,
        slack_brake=slack_brake,
    )


class MpccPlanner:
    """Stateful wrapper that carries the warm start between solves."""

    def __init__(self, path: ReferencePath,
                 weights: PlannerWeights = PlannerWeights(),
                 config: PlannerConfig = PlannerConfig(),
                 vehicle: VehicleParams = VehicleParams()):
        self.path = path
        self.weights = weights
        self.config = config
        self.vehicle = vehicle
        self._warm: np.ndarray | None = None
        self._warm_lambda: np.ndarray | None = None
        self._last_input: ControlInput | None = None

    def reset(self):
        self._warm = None
        self._warm_lambda = None
        self._last_input = None

    def solve(self, corridor: Corridor, initial_state: VehicleState, start_time: float) -> Trajectory:
        problem = MpccProblem(
            path=self.path,
            corridor=corridor,
            initial_state=initial_state,
            weights=self.weights,
            config=self.config,
            vehicle=self.vehicle,
            start_time=start_time,
            previous_input=self._last_input,
        )
        try:
            traj, u, lam = _solve_impl(problem, self._warm, self._warm_lambda)
        except InfeasibleError:
            self.reset()
            raise
        self._warm = u
        self._warm_lambda = lam
        self._last_input = traj.inputs[0]
        return traj
