"""Planar poses, unicycle motion and the leader-follower relative state.

Angles are wrapped to (-pi, pi] everywhere. Ground truth lives in the world
frame; the relative state is always derived from two world poses rather than
integrated on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

OMEGA_EPS = 1e-9


def wrap(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(angle, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    return a


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap(self.theta))


@dataclass(frozen=True)
class Twist:
    v: float
    omega: float

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.omega])


ZERO_TWIST = Twist(0.0, 0.0)


@dataclass(frozen=True)
class RelativeState:
    """Leader position in the follower frame plus heading difference."""

    x_lf: float
    y_lf: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "gamma", wrap(self.gamma))

    def as_array(self) -> np.ndarray:
        return np.array([self.x_lf, self.y_lf, self.gamma])

    @classmethod
    def from_array(cls, a) -> RelativeState:
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class Bounds:
    v_max: float
    omega_max: float
    vdot_max: float
    omegadot_max: float

    def __post_init__(self):
        for name in ("v_max", "omega_max", "vdot_max", "omegadot_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"Bounds.{name} must be positive")

    def clip(self, u: Twist) -> Twist:
        return Twist(
            min(max(u.v, -self.v_max), self.v_max),
            min(max(u.omega, -self.omega_max), self.omega_max),
        )

    def admits(self, u: Twist) -> bool:
        return abs(u.v) <= self.v_max and abs(u.omega) <= self.omega_max


def integrate_unicycle(pose: Pose2D, u: Twist, dt: float) -> Pose2D:
    """Advance a unicycle under a constant twist for ``dt`` seconds.

    Exact arc integration; straight-line limit when |omega| <= OMEGA_EPS.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    dth = u.omega * dt
    if abs(u.omega) > OMEGA_EPS:
        # chord form: 2 (v/w) sin(w dt / 2) along the mid-arc heading
        chord = 2.0 * u.v / u.omega * math.sin(0.5 * dth)
    else:
        chord = u.v * dt
    mid = pose.theta + 0.5 * dth
    return Pose2D(
        pose.x + chord * math.cos(mid),
        pose.y + chord * math.sin(mid),
        pose.theta + dth,
    )


def relative_state(leader: Pose2D, follower: Pose2D) -> RelativeState:
    dx = leader.x - follower.x
    dy = leader.y - follower.y
    c, s = math.cos(follower.theta), math.sin(follower.theta)
    return RelativeState(c * dx + s * dy, -s * dx + c * dy, wrap(leader.theta - follower.theta))


def leader_input_matrix(gamma: float) -> np.ndarray:
    return np.array([[math.cos(gamma), 0.0], [math.sin(gamma), 0.0], [0.0, 1.0]])


def follower_input_matrix(x_lf: float, y_lf: float) -> np.ndarray:
    return np.array([[-1.0, y_lf], [0.0, -x_lf], [0.0, -1.0]])


def relative_derivative(s: RelativeState, u_l: Twist, u_f: Twist) -> np.ndarray:
    """ds/dt = F(gamma) u_l + G(x, y) u_f."""
    return leader_input_matrix(s.gamma) @ u_l.as_array() + follower_input_matrix(s.x_lf, s.y_lf) @ u_f.as_array()


def compose(pose: Pose2D, dx: float, dy: float, dtheta: float) -> Pose2D:
    """Place a body-frame offset (dx, dy, dtheta) of ``pose`` in the world frame."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return Pose2D(pose.x + c * dx - s * dy, pose.y + s * dx + c * dy, pose.theta + dtheta)


def leader_pose_from_relative(follower: Pose2D, s: RelativeState) -> Pose2D:
    return compose(follower, s.x_lf, s.y_lf, s.gamma)
