"""Follower control stack: smoother, received-velocity gate, formation law, Lyapunov diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Bounds, RelativeState, Twist, follower_input_matrix, leader_input_matrix, wrap
from .scc.quantize import QuantizerSpec


class DegenerateError(ValueError):
    pass


@dataclass(frozen=True)
class GainConfig:
    k1: float = 0.5
    k2: float = 0.75
    k3: float = 0.5

    def __post_init__(self):
        if min(self.k1, self.k2, self.k3) <= 0:
            raise ValueError("gains must be positive")

    @property
    def K(self) -> np.ndarray:
        return np.diag([self.k1, self.k2, self.k3])


@dataclass
class SmootherState:
    u_current: Twist
    a_des: tuple[float, float] = (0.5, 0.2)
    f_v: float = 20.0

    def __post_init__(self):
        if min(self.a_des) <= 0 or self.f_v <= 0:
            raise ValueError("smoother rates must be positive")


def _ramp(target: float, current: float, limit: float) -> float:
    if target > current:
        return min(target, current + limit)
    return max(target, current - limit)


def smooth(u_target: Twist, state: SmootherState) -> Twist:
    """One smoother step: move each component toward the target by at most a_i / f_v."""
    dt = 1.0 / state.f_v
    u = Twist(
        _ramp(u_target.v, state.u_current.v, state.a_des[0] * dt),
        _ramp(u_target.omega, state.u_current.omega, state.a_des[1] * dt),
    )
    state.u_current = u
    return u


@dataclass
class GateState:
    u_hat_prev: Twist
    bounds: Bounds
    N: int = 5
    delta_t: float = 0.1
    accepted: int = 0
    rejected: int = 0
    missing: int = 0

    def __post_init__(self):
        if self.N < 1 or self.delta_t <= 0:
            raise ValueError("gate needs N >= 1 and delta_t > 0")

    @property
    def v_jump(self) -> float:
        return self.N * self.bounds.vdot_max * self.delta_t

    @property
    def omega_jump(self) -> float:
        return self.N * self.bounds.omegadot_max * self.delta_t


def gate_velocity(u_hat_new: Twist | None, state: GateState) -> Twist:
    """Accept a received leader velocity only if it is consistent with the acceleration bounds.

    ``None`` stands for a missing frame; the previous estimate is kept.
    """
    if u_hat_new is None:
        state.missing += 1
        return state.u_hat_prev
    prev = state.u_hat_prev
    if abs(u_hat_new.v - prev.v) > state.v_jump or abs(u_hat_new.omega - prev.omega) > state.omega_jump:
        state.rejected += 1
        return prev
    state.accepted += 1
    state.u_hat_prev = u_hat_new
    return u_hat_new


@dataclass(frozen=True)
class ErrorBoundConstants:
    delta_v_plus: float
    delta_omega_plus: float
    v_hat_plus: float
    omega_hat_plus: float


def error_bounds(bounds: Bounds, gate: GateState, q_v: QuantizerSpec, q_omega: QuantizerSpec) -> ErrorBoundConstants:
    jv = gate.N * bounds.vdot_max * gate.delta_t
    jw = gate.N * bounds.omegadot_max * gate.delta_t
    return ErrorBoundConstants(
        delta_v_plus=max(q_v.error_bound, jv),
        delta_omega_plus=max(q_omega.error_bound, jw),
        v_hat_plus=bounds.v_max + jv,
        omega_hat_plus=bounds.omega_max + jw,
    )


@dataclass(frozen=True)
class DesiredPose:
    x_bar: float
    y_bar: float
    gamma_bar: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x_bar, self.y_bar, self.gamma_bar])


def tracking_error(s: RelativeState, s_bar: DesiredPose) -> np.ndarray:
    return np.array([s.x_lf - s_bar.x_bar, s.y_lf - s_bar.y_bar, wrap(s.gamma - s_bar.gamma_bar)])


def control_matrix(x: float, y: float) -> np.ndarray:
    """sigma * H, the map from the virtual input to (v_f, omega_f)."""
    sigma = 1.0 / (x * x + 1.0)
    H = np.array([[1.0 / sigma, x * y, y], [0.0, x, 1.0]])
    return sigma * H


def control(s: RelativeState, s_bar: DesiredPose, u_hat_l: Twist, gains: GainConfig) -> Twist:
    eps = tracking_error(s, s_bar)
    w = gains.K @ eps + leader_input_matrix(s.gamma) @ u_hat_l.as_array()
    v, omega = control_matrix(s.x_lf, s.y_lf) @ w
    return Twist(float(v), float(omega))


def lyapunov(epsilon) -> float:
    e = np.asarray(epsilon, dtype=float)
    return 0.5 * float(e @ e)


def lyapunov_rate(s: RelativeState, epsilon, u_l_true: Twist, u_hat_l: Twist, u_f: Twist) -> float:
    """dV/dt = eps . (F u_l + G u_f) for a constant desired pose.

    ``u_hat_l`` is unused by the identity; it is accepted so callers can log one tuple.
    """
    del u_hat_l
    e = np.asarray(epsilon, dtype=float)
    sdot = leader_input_matrix(s.gamma) @ u_l_true.as_array() + follower_input_matrix(s.x_lf, s.y_lf) @ u_f.as_array()
    return float(e @ sdot)


def lyapunov_rate_expanded(s: RelativeState, epsilon, u_l_true: Twist, u_hat_l: Twist, gains: GainConfig) -> float:
    """Closed-loop dV/dt written out term by term for u_f = control(...)."""
    x, g = s.x_lf, s.gamma
    ex, ey, eg = np.asarray(epsilon, dtype=float)
    sigma = 1.0 / (x * x + 1.0)
    eta = x * sigma
    dv = u_l_true.v - u_hat_l.v
    dw = u_l_true.omega - u_hat_l.omega
    vh, wh = u_hat_l.v, u_hat_l.omega
    k1, k2, k3 = gains.k1, gains.k2, gains.k3
    # sigma*G*H = [[-1, 0, 0], [0, -eta*x, -eta], [0, -eta, -sigma]]
    xi = np.array([k1 * ex + math.cos(g) * vh, k2 * ey + math.sin(g) * vh, k3 * eg + wh])
    return (
        ex * (math.cos(g) * dv - xi[0] + math.cos(g) * vh)
        + ey * (math.sin(g) * dv - eta * x * xi[1] - eta * xi[2] + math.sin(g) * vh)
        + eg * (dw - eta * xi[1] - sigma * xi[2] + wh)
    )


def convergence_rate(s: RelativeState, gains: GainConfig) -> float:
    sigma = 1.0 / (s.x_lf ** 2 + 1.0)
    eta = s.x_lf * sigma
    return min(gains.k1, gains.k2 * eta * s.x_lf, gains.k3 * sigma)


def gain_floor(s: RelativeState, epsilon, consts: ErrorBoundConstants, k3_choice: float) -> tuple[float, float, float]:
    """Lower bounds on (k1, k2, k3) in the printed form; k2's bound uses ``k3_choice``."""
    ex, ey, eg = (abs(float(e)) for e in epsilon)
    if min(ex, ey, eg) < 1e-9:
        raise DegenerateError("gain floor divides by a vanishing error component")
    x = s.x_lf
    sigma = 1.0 / (x * x + 1.0)
    eta = x * sigma
    c = consts
    k1 = 2.0 * c.delta_v_plus / ex
    k3 = 2.0 * (c.delta_omega_plus + eta * x * c.omega_hat_plus + eta * c.v_hat_plus) / (sigma * eg)
    k2 = 2.0 * (c.delta_v_plus + sigma * c.v_hat_plus + eta * (k3_choice * ey + c.omega_hat_plus)) / (eta * (x + 1.0) * ey)
    return k1, k2, k3
