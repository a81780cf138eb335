"""Four-point homographies and raster warping.

Raster coordinates are (x, y) = (column, row) of pixel centers.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .errors import DegenerateConfiguration

COND_LIMIT = 1e10


def _normalizer(pts: np.ndarray) -> np.ndarray:
    c = pts.mean(axis=0)
    d = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean()
    if d == 0:
        raise DegenerateConfiguration("all points coincide")
    s = math.sqrt(2.0) / d
    return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])


def _collinear(pts: np.ndarray) -> bool:
    scale = max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1]), 1e-300)
    for i in range(4):
        a, b, c = (pts[j] for j in range(4) if j != i)
        area = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
        if area <= 1e-9 * scale * scale:
            return True
    return False


def estimate_homography(src, dst) -> np.ndarray:
    """Exact 4-point DLT with h33 = 1; maps src (x, y) to dst (x, y)."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if src.shape != (4, 2) or dst.shape != (4, 2):
        raise ValueError("estimate_homography needs exactly four 2-D correspondences")
    if _collinear(src) or _collinear(dst):
        raise DegenerateConfiguration("three of the four points are collinear")
    Ts, Td = _normalizer(src), _normalizer(dst)
    s = (np.c_[src, np.ones(4)] @ Ts.T)[:, :2]
    d = (np.c_[dst, np.ones(4)] @ Td.T)[:, :2]
    A = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((x, y), (u, v)) in enumerate(zip(s, d)):
        A[2 * i] = [x, y, 1, 0, 0, 0, -u * x, -u * y]
        A[2 * i + 1] = [0, 0, 0, x, y, 1, -v * x, -v * y]
        b[2 * i], b[2 * i + 1] = u, v
    if np.linalg.cond(A) > COND_LIMIT:
        raise DegenerateConfiguration("ill-conditioned correspondence system")
    h = np.linalg.solve(A, b)
    Hn = np.append(h, 1.0).reshape(3, 3)
    H = np.linalg.inv(Td) @ Hn @ Ts
    if abs(H[2, 2]) < 1e-300:
        raise DegenerateConfiguration("homography maps the origin to infinity")
    return H / H[2, 2]


def apply_homography(H, pts) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    q = np.c_[pts, np.ones(len(pts))] @ np.asarray(H).T
    return q[:, :2] / q[:, 2:3]


def warp(raster, H, out_shape: tuple[int, int], fill: float = 0.0, out=None) -> np.ndarray:
    """Resample ``raster`` into an (h, w) output where out(H p) = raster(p); bilinear.

    With ``out`` given, only the bounding box of the warped source is written into it.
    """
    img = np.asarray(raster, dtype=float)
    h, w = out_shape
    Hinv = np.linalg.inv(np.asarray(H, dtype=float))
    if out is None:
        y0, y1, x0, x1 = 0, h, 0, w
        result = np.full((h, w), float(fill))
    else:
        result = out
        corners = np.array([[-0.5, -0.5], [img.shape[1] - 0.5, -0.5], [-0.5, img.shape[0] - 0.5],
                            [img.shape[1] - 0.5, img.shape[0] - 0.5]])
        q = apply_homography(H, corners)
        x0 = max(int(np.floor(q[:, 0].min())), 0)
        x1 = min(int(np.ceil(q[:, 0].max())) + 1, w)
        y0 = max(int(np.floor(q[:, 1].min())), 0)
        y1 = min(int(np.ceil(q[:, 1].max())) + 1, h)
        if x1 <= x0 or y1 <= y0:
            return result
    yy, xx = np.mgrid[y0:y1, x0:x1].astype(float)
    den = Hinv[2, 0] * xx + Hinv[2, 1] * yy + Hinv[2, 2]
    sx = (Hinv[0, 0] * xx + Hinv[0, 1] * yy + Hinv[0, 2]) / den
    sy = (Hinv[1, 0] * xx + Hinv[1, 1] * yy + Hinv[1, 2]) / den
    inside = (sx >= -0.5) & (sx <= img.shape[1] - 0.5) & (sy >= -0.5) & (sy <= img.shape[0] - 0.5) & (den > 0)
    vals = ndimage.map_coordinates(img, [sy, sx], order=1, mode="nearest")
    patch = result[y0:y1, x0:x1]
    patch[inside] = vals[inside]
    return result


def rectify(raster, H, out_shape: tuple[int, int], fill: float = 0.0) -> np.ndarray:
    """Sample ``raster`` at H^-1-mapped output coordinates (H maps raster -> output)."""
    return warp(raster, H, out_shape, fill=fill)


def view_angle_homography(
    width: int,
    height: int,
    angle: float,
    distance: float = 1.0,
    focal: float = 500.0,
    screen_width: float = 0.4,
    canvas: tuple[int, int] = (640, 480),
    tilt: float = 0.0,
) -> np.ndarray:
    """Homography taking a width x height raster to a pinhole view of it rotated by ``angle``
    about its vertical axis (and ``tilt`` about the horizontal one), centered in ``canvas``."""
    s = screen_width / width
    corners = np.array([[-0.5, -0.5], [width - 0.5, -0.5], [-0.5, height - 0.5], [width - 0.5, height - 0.5]])
    cx, cy = (width - 1) / 2, (height - 1) / 2
    ca, sa = math.cos(angle), math.sin(angle)
    ct, st = math.cos(tilt), math.sin(tilt)
    img = []
    for x, y in corners:
        X, Y = (x - cx) * s, (y - cy) * s
        # rotate about the screen's vertical axis, then its horizontal axis
        Xr, Yr = X * ca, Y * ct
        Z = distance + X * sa + Y * st
        img.append([focal * Xr / Z + (canvas[0] - 1) / 2, focal * Yr / Z + (canvas[1] - 1) / 2])
    return estimate_homography(corners, np.array(img))
