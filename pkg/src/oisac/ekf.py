"""Extended Kalman filter over the relative pose and the leader's (v, omega).

The leader velocity is modeled as constant plus process noise; measurements
are camera pose estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import RelativeState, Twist, wrap


class NumericalFailure(ArithmeticError):
    pass


@dataclass(frozen=True)
class EkfNoise:
    Q: tuple = (1e-6, 1e-6, 1e-6, 1e-2, 1e-2)
    R: tuple = (1e-4, 1e-4, 4e-4)

    def __post_init__(self):
        if len(self.Q) != 5 or len(self.R) != 3:
            raise ValueError("Q has 5 diagonal entries and R has 3")
        if min(self.Q) <= 0 or min(self.R) <= 0:
            raise ValueError("noise diagonals must be positive")

    def to_dict(self) -> dict:
        return {"Q": list(self.Q), "R": list(self.R)}


@dataclass
class EkfState:
    mean: np.ndarray
    cov: np.ndarray = field(default_factory=lambda: 0.1 * np.eye(5))

    @classmethod
    def initial(cls, s: RelativeState, p0: float = 0.1) -> EkfState:
        return cls(np.array([s.x_lf, s.y_lf, s.gamma, 0.0, 0.0]), p0 * np.eye(5))

    @property
    def pose(self) -> RelativeState:
        return RelativeState(*self.mean[:3])

    @property
    def velocity(self) -> Twist:
        return Twist(float(self.mean[3]), float(self.mean[4]))


def process(mean: np.ndarray, u_f: Twist, dt: float) -> np.ndarray:
    x, y, g, v, w = mean
    vf, wf = u_f.v, u_f.omega
    out = np.array([
        x + dt * (v * math.cos(g) - vf + y * wf),
        y + dt * (v * math.sin(g) - x * wf),
        g + dt * (w - wf),
        v,
        w,
    ])
    out[2] = wrap(out[2])
    return out


def process_jacobian(mean: np.ndarray, u_f: Twist, dt: float) -> np.ndarray:
    _, _, g, v, _ = mean
    wf = u_f.omega
    J = np.eye(5)
    J[0, 1] = dt * wf
    J[0, 2] = -dt * v * math.sin(g)
    J[0, 3] = dt * math.cos(g)
    J[1, 0] = -dt * wf
    J[1, 2] = dt * v * math.cos(g)
    J[1, 3] = dt * math.sin(g)
    J[2, 4] = dt
    return J


def predict(state: EkfState, u_f: Twist, dt: float, noise: EkfNoise) -> EkfState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    J = process_jacobian(state.mean, u_f, dt)
    P = J @ state.cov @ J.T + np.diag(noise.Q) * dt
    return EkfState(process(state.mean, u_f, dt), 0.5 * (P + P.T))


H_POSE = np.hstack([np.eye(3), np.zeros((3, 2))])


def update(state: EkfState, z: RelativeState, noise: EkfNoise) -> EkfState:
    innov = z.as_array() - state.mean[:3]
    innov[2] = wrap(innov[2])
    P = state.cov
    R = np.diag(noise.R)
    S = H_POSE @ P @ H_POSE.T + R
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("innovation covariance is not positive definite") from exc
    # K = P H^T S^-1 via the Cholesky factor
    PHt = P @ H_POSE.T
    K = np.linalg.solve(L.T, np.linalg.solve(L, PHt.T)).T
    mean = state.mean + K @ innov
    mean[2] = wrap(mean[2])
    A = np.eye(5) - K @ H_POSE
    Pn = A @ P @ A.T + K @ R @ K.T
    return EkfState(mean, 0.5 * (Pn + Pn.T))
