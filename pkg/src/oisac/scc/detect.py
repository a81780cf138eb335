"""Finder-marker detection on grayscale rasters.

Otsu binarization, connected dark components with a dark core inside a
light hole, a 1:1:3:1:1 scanline check, then stripe verification between
candidate centers.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy import ndimage
from skimage.filters import threshold_otsu

from ..sensing import FeaturePixels
from .errors import DegenerateConfiguration, DetectionFailure
from .homography import apply_homography, estimate_homography

FINDER_RATIOS = np.array([1.0, 1.0, 3.0, 1.0, 1.0])
RATIO_TOLERANCE = 0.5
STRIPE_TOLERANCE = 0.3
MAX_CANDIDATES = 8


def _runs(profile: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Run values and lengths of a boolean profile."""
    if profile.size == 0:
        return np.array([], dtype=bool), np.array([], dtype=int)
    edges = np.flatnonzero(profile[1:] != profile[:-1]) + 1
    starts = np.r_[0, edges]
    lengths = np.diff(np.r_[starts, profile.size])
    return profile[starts], lengths


def _finder_scan(line: np.ndarray, center: int) -> bool:
    """True if the dark run at ``center`` is flanked by light, dark runs in 1:1:3:1:1 ratio."""
    vals, lens = _runs(line)
    ends = np.cumsum(lens)
    k = int(np.searchsorted(ends, center, side="right"))
    if k < 2 or k + 2 >= len(vals) or not vals[k]:
        return False
    window = lens[k - 2 : k + 3].astype(float)
    if not (vals[k - 2] and not vals[k - 1] and not vals[k + 1] and vals[k + 2]):
        return False
    unit = window.sum() / FINDER_RATIOS.sum()
    expected = FINDER_RATIOS * unit
    return bool(np.all(np.abs(window - expected) <= RATIO_TOLERANCE * expected + 1.0))


def find_candidates(img: np.ndarray, dark: np.ndarray) -> list[tuple[float, float, float]]:
    """(x, y, area) of every dark ring that encloses a dark core and passes the scanline test."""
    labels, _ = ndimage.label(dark, structure=np.ones((3, 3)))
    sizes = np.bincount(labels.ravel())
    out = []
    for k, slc in enumerate(ndimage.find_objects(labels), start=1):
        if slc is None:
            continue
        h = slc[0].stop - slc[0].start
        w = slc[1].stop - slc[1].start
        if min(h, w) < 5 or max(h, w) > 3 * min(h, w):
            continue
        # a ring covers roughly half of its bounding box
        if not 0.15 <= sizes[k] / (h * w) <= 0.8:
            continue
        ring = labels[slc] == k
        filled = ndimage.binary_fill_holes(ring)
        hole = filled & ~ring
        core = hole & dark[slc]
        area = filled.sum()
        if core.sum() == 0 or not 0.04 <= core.sum() / area <= 0.4 or not 0.25 <= ring.sum() / area <= 0.8:
            continue
        cy, cx = ndimage.center_of_mass(core)
        row, col = int(round(cy)), int(round(cx))
        # scan the full rows/columns clipped to a margin around the bbox
        y0, x0 = slc[0].start, slc[1].start
        pad = max(h, w) // 3 + 2
        r0, r1 = max(0, y0 - pad), min(dark.shape[0], y0 + h + pad)
        c0, c1 = max(0, x0 - pad), min(dark.shape[1], x0 + w + pad)
        if not _finder_scan(dark[y0 + row, c0:c1], x0 + col - c0):
            continue
        if not _finder_scan(dark[r0:r1, x0 + col], y0 + row - r0):
            continue
        # darkness-weighted centroid over the marker and a one-pixel rim
        ys, xs = slice(max(0, y0 - 1), min(img.shape[0], y0 + h + 1)), slice(max(0, x0 - 1), min(img.shape[1], x0 + w + 1))
        mask = np.zeros((ys.stop - ys.start, xs.stop - xs.start), dtype=bool)
        mask[y0 - ys.start : y0 - ys.start + h, x0 - xs.start : x0 - xs.start + w] = filled
        mask = ndimage.binary_dilation(mask)
        patch = img[ys, xs]
        weight = np.where(mask, patch[mask].max() - patch, 0.0)
        my, mx = ndimage.center_of_mass(weight)
        out.append((xs.start + mx, ys.start + my, float(area)))
    return out


def _count_stripes(dark: np.ndarray, p: np.ndarray, q: np.ndarray) -> int:
    """Number of dark runs on the straight segment p -> q (bilinear samples, two per pixel)."""
    length = float(np.hypot(*(q - p)))
    n = max(int(np.ceil(2 * length)), 2)
    t = np.linspace(0.0, 1.0, n)
    xs = p[0] + t * (q[0] - p[0])
    ys = p[1] + t * (q[1] - p[1])
    vals = ndimage.map_coordinates(dark.astype(float), [ys, xs], order=1, mode="nearest") > 0.5
    runs, _ = _runs(vals)
    return int(runs.sum())


def _stripes_ok(dark: np.ndarray, H: np.ndarray, layout, i: int, j: int) -> bool:
    c = layout.marker_centers
    a, b = layout.stripe_span(i, j)
    length = float(np.hypot(*(c[j] - c[i])))
    u = (c[j] - c[i]) / length
    # trim half a module inside the light gaps at both ends
    p0 = c[i] + u * (a - layout.module / 2)
    p1 = c[i] + u * (b + layout.module / 2)
    ends = apply_homography(H, np.array([p0, p1]))
    if not np.all(np.isfinite(ends)):
        return False
    got = _count_stripes(dark, ends[0], ends[1])
    expected = layout.stripe_periods(i, j)
    return abs(got - expected) <= STRIPE_TOLERANCE * expected


def _cyclic_labelings(pts: np.ndarray):
    """Yield index orders (A, B, C, D) for each rotation of the angular order around the centroid."""
    c = pts.mean(axis=0)
    order = list(np.argsort(np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])))
    # image y points down, so increasing angle runs clockwise on screen: A, B, D, C
    for r in range(4):
        a, b, d, cc = (order[(r + k) % 4] for k in range(4))
        yield (a, b, cc, d)


def detect_markers(raster, layout=None) -> FeaturePixels:
    from .frame import EDGES, FrameLayout, FrameRaster

    layout = layout or FrameLayout()
    img = np.asarray(raster.pixels if isinstance(raster, FrameRaster) else raster, dtype=float)
    if img.ndim != 2 or np.ptp(img) == 0:
        raise DetectionFailure("too_few_candidates", "flat image")
    dark = img < threshold_otsu(img)
    cands = find_candidates(img, dark)
    if len(cands) < 4:
        raise DetectionFailure("too_few_candidates", f"{len(cands)} finder candidates")
    cands.sort(key=lambda c: -c[2])
    pts_all = np.array([(x, y) for x, y, _ in cands[:MAX_CANDIDATES]])
    hits = []
    for combo in itertools.combinations(range(len(pts_all)), 4):
        pts = pts_all[list(combo)]
        for lab in _cyclic_labelings(pts):
            ordered = pts[list(lab)]
            try:
                H = estimate_homography(layout.marker_centers, ordered)
            except (DegenerateConfiguration, np.linalg.LinAlgError):
                continue
            if all(_stripes_ok(dark, H, layout, i, j) for i, j in EDGES):
                hits.append(ordered)
    if not hits:
        raise DetectionFailure("stripe_mismatch", "no candidate quadruple carries the stripe pattern")
    # a 180 degree relabeling also matches; the top edge (A-B) is the one higher in the image
    best = min(hits, key=lambda o: o[0][1] + o[1][1])
    distinct = {tuple(np.round(np.sort(h, axis=0).ravel(), 3)) for h in hits}
    if len(distinct) > 1:
        raise DetectionFailure("ambiguous", f"{len(distinct)} marker quadruples verify")
    return FeaturePixels.from_array(best)
