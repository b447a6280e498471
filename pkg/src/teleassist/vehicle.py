"""Vehicle state, input limits and kinematic bicycle dynamics.

State vector: (x, y, heading, speed, progress). Input vector:
(acceleration, steering angle, progress rate). Integration is one explicit
midpoint (RK2) step; speed is clamped at zero from below, both inside the
derivative evaluation and on the resulting state, so the model never rolls
backward while braking to a stop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

NX = 5  # state dimension
NU = 3  # input dimension


@dataclass(frozen=True)
class VehicleParams:
    body_radius: float = 1.0       # radius of the disc approximating the body
    wheelbase: float = 2.7
    accel_max: float = 2.0
    steer_max: float = 0.65
    progress_rate_max: float = 5.0

    def input_lower(self) -> np.ndarray:
        return np.array([-self.accel_max, -self.steer_max, 0.0])

    def input_upper(self) -> np.ndarray:
        return np.array([self.accel_max, self.steer_max, self.progress_rate_max])


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    heading: float
    speed: float
    progress: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.heading, self.speed, self.progress])

    @staticmethod
    def from_array(arr) -> "VehicleState":
        x, y, heading, speed, progress = (float(v) for v in arr)
        return VehicleState(x, y, heading, speed, progress)

    def with_speed(self, speed: float) -> "VehicleState":
        return replace(self, speed=speed)

    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class ControlInput:
    accel: float
    steer: float
    progress_rate: float

    def as_array(self) -> np.ndarray:
        return np.array([self.accel, self.steer, self.progress_rate])

    @staticmethod
    def from_array(arr) -> "ControlInput":
        a, d, r = (float(v) for v in arr)
        return ControlInput(a, d, r)


def _derivative(state: np.ndarray, inp: np.ndarray, wheelbase: float) -> np.ndarray:
    v = max(state[3], 0.0)
    psi = state[2]
    return np.array([
        v * np.cos(psi),
        v * np.sin(psi),
        (v / wheelbase) * np.tan(inp[1]),
        inp[0],
        inp[2],
    ])


def _derivative_jacobians(state: np.ndarray, inp: np.ndarray, wheelbase: float):
    """Jacobians of the continuous dynamics wrt state and input."""
    v = state[3]
    v_eff = max(v, 0.0)
    # right-derivative at the clamp so accelerating from rest is visible
    dv = 1.0 if v >= 0.0 else 0.0
    psi = state[2]
    c, s = np.cos(psi), np.sin(psi)
    tan_d = np.tan(inp[1])
    jx = np.zeros((NX, NX))
    jx[0, 2] = -v_eff * s
    jx[0, 3] = c * dv
    jx[1, 2] = v_eff * c
    jx[1, 3] = s * dv
    jx[2, 3] = tan_d / wheelbase * dv
    ju = np.zeros((NX, NU))
    ju[2, 1] = (v_eff / wheelbase) * (1.0 + tan_d * tan_d)
    ju[3, 0] = 1.0
    ju[4, 2] = 1.0
    return jx, ju


SUBSTEPS = 2


def _midpoint_scalar(x, y, psi, v, th, accel, steer, rate, dt, wheelbase):
    v1 = v if v > 0.0 else 0.0
    tan_d = math.tan(steer)
    half = 0.5 * dt
    # midpoint heading and speed are all the second stage needs
    mpsi = psi + half * (v1 / wheelbase) * tan_d
    mv = v + half * accel
    mv1 = mv if mv > 0.0 else 0.0
    nx = x + dt * mv1 * math.cos(mpsi)
    ny = y + dt * mv1 * math.sin(mpsi)
    npsi = psi + dt * (mv1 / wheelbase) * tan_d
    nv = v + dt * accel
    if nv < 0.0:
        nv = 0.0
    nth = th + dt * rate
    return nx, ny, npsi, nv, nth


def step_scalar(x: float, y: float, psi: float, v: float, th: float,
                accel: float, steer: float, rate: float,
                dt: float, wheelbase: float) -> tuple:
    """One integration step in scalar arithmetic (hot path): explicit
    midpoint, split into substeps to keep the per-step error small."""
    h = dt / SUBSTEPS
    state = (x, y, psi, v, th)
    for _ in range(SUBSTEPS):
        state = _midpoint_scalar(*state, accel, steer, rate, h, wheelbase)
    return state


def step_array(state: np.ndarray, inp: np.ndarray, dt: float, wheelbase: float) -> np.ndarray:
    """One explicit-midpoint step on raw arrays."""
    return np.array(step_scalar(state[0], state[1], state[2], state[3], state[4],
                                inp[0], inp[1], inp[2], dt, wheelbase))


def _midpoint_jacobians(state: np.ndarray, inp: np.ndarray, dt: float, wheelbase: float):
    k1x, k1u = _derivative_jacobians(state, inp, wheelbase)
    k1 = _derivative(state, inp, wheelbase)
    mid = state + 0.5 * dt * k1
    k2x, k2u = _derivative_jacobians(mid, inp, wheelbase)
    a = np.eye(NX) + dt * k2x @ (np.eye(NX) + 0.5 * dt * k1x)
    b = dt * (k2u + k2x @ (0.5 * dt * k1u))
    return a, b


def step_jacobians(state: np.ndarray, inp: np.ndarray, dt: float, wheelbase: float):
    """Jacobians of step_array wrt state and input (ignoring the speed
    clamps, which are inactive whenever the speed stays positive)."""
    h = dt / SUBSTEPS
    x = np.asarray(state, dtype=float)
    a = np.eye(NX)
    b = np.zeros((NX, NU))
    for _ in range(SUBSTEPS):
        a_k, b_k = _midpoint_jacobians(x, inp, h, wheelbase)
        a = a_k @ a
        b = a_k @ b + b_k
        x = np.array(_midpoint_scalar(x[0], x[1], x[2], x[3], x[4],
                                      inp[0], inp[1], inp[2], h, wheelbase))
    return a, b


def _midpoint_step_batch(X, U, dt, wheelbase):
    v1 = np.maximum(X[:, 3], 0.0)
    tan_d = np.tan(U[:, 1])
    mpsi = X[:, 2] + 0.5 * dt * (v1 / wheelbase) * tan_d
    mv1 = np.maximum(X[:, 3] + 0.5 * dt * U[:, 0], 0.0)
    out = np.empty_like(X)
    out[:, 0] = X[:, 0] + dt * mv1 * np.cos(mpsi)
    out[:, 1] = X[:, 1] + dt * mv1 * np.sin(mpsi)
    out[:, 2] = X[:, 2] + dt * (mv1 / wheelbase) * tan_d
    out[:, 3] = np.maximum(X[:, 3] + dt * U[:, 0], 0.0)
    out[:, 4] = X[:, 4] + dt * U[:, 2]
    return out


def _derivative_jacobians_batch(X, U, wheelbase):
    n = X.shape[0]
    v = X[:, 3]
    v_eff = np.maximum(v, 0.0)
    dv = (v >= 0.0).astype(float)
    c, s = np.cos(X[:, 2]), np.sin(X[:, 2])
    tan_d = np.tan(U[:, 1])
    jx = np.zeros((n, NX, NX))
    jx[:, 0, 2] = -v_eff * s
    jx[:, 0, 3] = c * dv
    jx[:, 1, 2] = v_eff * c
    jx[:, 1, 3] = s * dv
    jx[:, 2, 3] = tan_d / wheelbase * dv
    ju = np.zeros((n, NX, NU))
    ju[:, 2, 1] = (v_eff / wheelbase) * (1.0 + tan_d * tan_d)
    ju[:, 3, 0] = 1.0
    ju[:, 4, 2] = 1.0
    return jx, ju


def _derivative_batch(X, U, wheelbase):
    v_eff = np.maximum(X[:, 3], 0.0)
    out = np.empty_like(X)
    out[:, 0] = v_eff * np.cos(X[:, 2])
    out[:, 1] = v_eff * np.sin(X[:, 2])
    out[:, 2] = (v_eff / wheelbase) * np.tan(U[:, 1])
    out[:, 3] = U[:, 0]
    out[:, 4] = U[:, 2]
    return out


def _midpoint_jacobians_batch(X, U, dt, wheelbase):
    k1x, k1u = _derivative_jacobians_batch(X, U, wheelbase)
    k1 = _derivative_batch(X, U, wheelbase)
    mid = X + 0.5 * dt * k1
    k2x, k2u = _derivative_jacobians_batch(mid, U, wheelbase)
    eye = np.broadcast_to(np.eye(NX), (X.shape[0], NX, NX))
    a = eye + dt * np.einsum("nij,njk->nik", k2x, eye + 0.5 * dt * k1x)
    b = dt * (k2u + 0.5 * dt * np.einsum("nij,njk->nik", k2x, k1u))
    return a, b


def step_jacobians_batch(X, U, dt, wheelbase):
    """step_jacobians for every stage at once: X is (n, NX) states, U is
    (n, NU) inputs; returns (n, NX, NX) and (n, NX, NU)."""
    h = dt / SUBSTEPS
    x = np.asarray(X, dtype=float)
    a = np.broadcast_to(np.eye(NX), (x.shape[0], NX, NX)).copy()
    b = np.zeros((x.shape[0], NX, NU))
    for _ in range(SUBSTEPS):
        a_k, b_k = _midpoint_jacobians_batch(x, U, h, wheelbase)
        a = np.einsum("nij,njk->nik", a_k, a)
        b = np.einsum("nij,njk->nik", a_k, b) + b_k
        x = _midpoint_step_batch(x, U, h, wheelbase)
    return a, b


def dynamics_step(state: VehicleState, inp: ControlInput, dt: float, params: VehicleParams) -> VehicleState:
    """Advance the vehicle by one step of length dt."""
    return VehicleState.from_array(step_array(state.as_array(), inp.as_array(), dt, params.wheelbase))
