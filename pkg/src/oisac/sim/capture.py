"""Synthetic camera captures of the leader's screen."""

from __future__ import annotations

import numpy as np

from ..geometry import RelativeState
from ..scc.frame import FrameLayout, FrameRaster
from ..scc.homography import estimate_homography, warp
from ..sensing import CameraIntrinsics, ScreenGeometry, project_features


def screen_to_image(s: RelativeState, K: CameraIntrinsics, geom: ScreenGeometry, layout: FrameLayout) -> np.ndarray:
    """Homography from layout pixels to camera pixels (the screen is planar, so this is exact)."""
    return estimate_homography(layout.marker_centers, project_features(s, K, geom))


def capture(
    screen: FrameRaster,
    s: RelativeState,
    K: CameraIntrinsics,
    geom: ScreenGeometry,
    layout: FrameLayout,
    background: float = 40.0,
) -> FrameRaster:
    H = screen_to_image(s, K, geom, layout)
    canvas = np.full((K.height, K.width), float(background))
    return FrameRaster(warp(screen.pixels, H, canvas.shape, out=canvas))
