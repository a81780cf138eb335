"""Synthetic camera observation of the leader's screen and closed-form pose recovery.

Camera frame convention: z forward along the follower's heading, x to the
follower's right, y downward. The screen center sits at camera height, with
feature points A (top-left), B (top-right), C (bottom-left), D (bottom-right)
as the camera sees them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import RelativeState


class NonPositiveDepth(ValueError):
    pass


class DegenerateObservation(ValueError):
    pass


class Violation(enum.Enum):
    RANGE = "range"
    BEARING = "bearing"
    ORIENTATION = "orientation"
    IMAGE = "image"


class NotVisible(Exception):
    def __init__(self, violation: Violation):
        super().__init__(f"leader not visible ({violation.value})")
        self.violation = violation


@dataclass(frozen=True)
class CameraIntrinsics:
    f_m: float = 500.0
    f_n: float = 500.0
    m_0: float = 320.0
    n_0: float = 240.0
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if not (self.f_m > 0 and self.f_n > 0):
            raise ValueError("focal scales must be positive")
        if not (0 <= self.m_0 < self.width and 0 <= self.n_0 < self.height):
            raise ValueError("principal point outside the image")


@dataclass(frozen=True)
class ScreenGeometry:
    L1: float = 0.232
    L2: float = 0.145
    d_l: float = 0.275
    d_f: float = -0.017
    mu: float = 0.2

    def __post_init__(self):
        if not (self.L1 > 0 and self.L2 > 0 and self.d_l > 0 and self.mu > 0):
            raise ValueError("L1, L2, d_l and mu must be positive")


@dataclass(frozen=True)
class FovLimits:
    alpha_max: float = math.pi / 4
    d_max: float = 1.45
    gamma_max: float = math.pi / 3

    def __post_init__(self):
        if not (0 < self.alpha_max < math.pi / 2 and 0 < self.gamma_max < math.pi / 2 and self.d_max > 0):
            raise ValueError("invalid field-of-view limits")


@dataclass(frozen=True)
class FeaturePixels:
    A: tuple[float, float]
    B: tuple[float, float]
    C: tuple[float, float]
    D: tuple[float, float]

    def as_array(self) -> np.ndarray:
        return np.array([self.A, self.B, self.C, self.D], dtype=float)

    @classmethod
    def from_array(cls, pts) -> FeaturePixels:
        p = [(float(m), float(n)) for m, n in np.asarray(pts, dtype=float)]
        return cls(*p)


def feature_points_camera(s: RelativeState, geom: ScreenGeometry) -> np.ndarray:
    """Camera-frame coordinates (rows A, B, C, D; columns x, y, z) of the feature points."""
    if abs(s.gamma) >= math.pi / 2:
        raise DegenerateObservation("screen is back-facing")
    cg, sg = math.cos(s.gamma), math.sin(s.gamma)
    # screen center in the follower frame, then in camera axes
    ox = s.x_lf - geom.d_l * cg
    oy = s.y_lf - geom.d_l * sg
    z_o = ox - geom.d_f
    x_o = -oy
    # B - A = L1 * (x: cos g, z: sin g)
    half = 0.5 * geom.L1
    xa, za = x_o - half * cg, z_o - half * sg
    xb, zb = x_o + half * cg, z_o + half * sg
    top, bottom = -0.5 * geom.L2, 0.5 * geom.L2
    return np.array(
        [
            [xa, top, za],
            [xb, top, zb],
            [xa, bottom, za],
            [xb, bottom, zb],
        ]
    )


def project(point, K: CameraIntrinsics) -> tuple[float, float]:
    x, y, z = (float(c) for c in point)
    if z <= 0:
        raise NonPositiveDepth(f"point depth {z} is not in front of the camera")
    return K.f_m * x / z + K.m_0, K.f_n * y / z + K.n_0


def check_visibility(s: RelativeState, fov: FovLimits, geom: ScreenGeometry) -> Violation | None:
    """Return the first violated visibility condition, or None when the leader is observable."""
    x = s.x_lf
    lower = 2.0 * geom.mu * math.cos(fov.alpha_max - math.pi / 6)
    if not (lower < x <= fov.d_max - geom.mu):
        return Violation.RANGE
    alpha = math.atan2(s.y_lf, x)
    limit = math.atan((x * math.sin(fov.alpha_max) - geom.mu) / (x * math.cos(fov.alpha_max)))
    if abs(alpha) > limit:
        return Violation.BEARING
    if not abs(s.gamma) < fov.gamma_max:
        return Violation.ORIENTATION
    return None


def project_features(s: RelativeState, K: CameraIntrinsics, geom: ScreenGeometry) -> np.ndarray:
    """Exact (unquantized) pixel coordinates of A, B, C, D as a 4x2 array."""
    pts = feature_points_camera(s, geom)
    return np.array([project(p, K) for p in pts])


def observe(
    s: RelativeState,
    K: CameraIntrinsics,
    geom: ScreenGeometry,
    fov: FovLimits | None = None,
    quantize: bool = False,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> FeaturePixels:
    """Project the four feature points; raise NotVisible when the leader cannot be seen."""
    if fov is not None:
        violation = check_visibility(s, fov, geom)
        if violation is not None:
            raise NotVisible(violation)
    try:
        px = project_features(s, K, geom)
    except (NonPositiveDepth, DegenerateObservation):
        raise NotVisible(Violation.IMAGE) from None
    if quantize:
        px = np.floor(px + 0.5)
    if noise_sigma > 0:
        if rng is None:
            raise ValueError("pixel noise requires an rng")
        px = px + rng.normal(0.0, noise_sigma, size=px.shape)
    inside = (px[:, 0] >= 0) & (px[:, 0] <= K.width - 1) & (px[:, 1] >= 0) & (px[:, 1] <= K.height - 1)
    if not inside.all():
        raise NotVisible(Violation.IMAGE)
    return FeaturePixels.from_array(px)


def estimate_pose(p: FeaturePixels, K: CameraIntrinsics, geom: ScreenGeometry) -> RelativeState:
    """Recover (x_lf, y_lf, gamma) from the pixel coordinates of A, B and C."""
    (m_a, n_a), (m_b, n_b), (_, n_c) = p.A, p.B, p.C
    dn = n_c - n_a
    mt_a, nt_a = m_a - K.m_0, n_a - K.n_0
    mt_b, nt_b = m_b - K.m_0, n_b - K.n_0
    if dn == 0 or nt_b == 0:
        raise DegenerateObservation("feature points A/C coincide vertically or B lies on the principal row")
    z_a = K.f_n * geom.L2 / dn
    if z_a <= 0:
        raise DegenerateObservation("recovered depth is not positive")
    ratio = nt_a / nt_b
    z_b = z_a * ratio
    x_a = z_a * mt_a / K.f_m
    x_b = z_b * mt_b / K.f_m
    z_o = 0.5 * (z_a + z_b)
    x_o = 0.5 * (x_a + x_b)
    sin_g = (z_b - z_a) / geom.L1
    cos_g = (x_b - x_a) / geom.L1
    norm = math.hypot(sin_g, cos_g)
    if norm == 0 or cos_g <= 0:
        raise DegenerateObservation("recovered orientation is back-facing")
    sin_g, cos_g = sin_g / norm, cos_g / norm
    gamma = math.atan2(sin_g, cos_g)
    return RelativeState(z_o + geom.d_f + geom.d_l * cos_g, -x_o + geom.d_l * sin_g, gamma)
