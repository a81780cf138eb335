"""Screen frames: layout, payload serialization, rendering and decoding."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import duplication as dup
from .errors import CapacityExceeded, DecodeFailure, DegenerateConfiguration, DetectionFailure
from .homography import estimate_homography, rectify
from .modulation import FFT, MODES, SLOT_TABLE_VERSION, capacity, demodulate, modulate

SEQ_BITS = 16
TIMESTAMP_BITS = 32
PLUMBING_REPEATS = 3
PAYLOAD_BITS = 2 * dup.BLOCK_BITS + PLUMBING_REPEATS * (SEQ_BITS + TIMESTAMP_BITS)

# set to True for bit-adjacent copies instead of grouped copies
INTERLEAVED = False

# a frame whose repetition groups disagree this often is treated as garbage
MAX_SPLIT_VOTE_FRACTION = 0.25


@dataclass(frozen=True)
class VelocityPayload:
    code_v: int
    code_omega: int
    seq: int = 0
    timestamp_ms: int = 0

    def __post_init__(self):
        for name, width in (("code_v", 8), ("code_omega", 8), ("seq", SEQ_BITS), ("timestamp_ms", TIMESTAMP_BITS)):
            value = getattr(self, name)
            if not 0 <= value < (1 << width):
                raise ValueError(f"{name}={value} does not fit in {width} bits")


def _fields_and_repeats():
    return [
        ("code_v", 8, dup.BYTE_REPEATS),
        ("code_omega", 8, dup.BYTE_REPEATS),
        ("seq", SEQ_BITS, (PLUMBING_REPEATS,) * SEQ_BITS),
        ("timestamp_ms", TIMESTAMP_BITS, (PLUMBING_REPEATS,) * TIMESTAMP_BITS),
    ]


def payload_to_bits(p: VelocityPayload) -> np.ndarray:
    out: list[int] = []
    for name, width, reps in _fields_and_repeats():
        block = dup.repeat_bits(dup.byte_to_bits(getattr(p, name), width), reps)
        out.extend(dup.interleave(block, reps) if INTERLEAVED else block)
    return np.array(out, dtype=np.uint8)


def bits_to_payload(bits) -> tuple[VelocityPayload, float]:
    """Majority-decode a serialized payload; also returns the fraction of split votes."""
    bits = np.asarray(bits, dtype=int)
    if bits.size != PAYLOAD_BITS:
        raise ValueError(f"expected {PAYLOAD_BITS} bits, got {bits.size}")
    values = {}
    split = groups = 0
    start = 0
    for name, width, reps in _fields_and_repeats():
        n = sum(reps)
        block = bits[start : start + n]
        start += n
        if INTERLEAVED:
            order = dup.interleave(list(range(n)), reps)
            ungrouped = np.empty(n, dtype=int)
            ungrouped[order] = block
            block = ungrouped
        decided, margins = dup.vote(block, reps)
        values[name] = dup.bits_to_int(decided)
        split += sum(1 for m, r in zip(margins, reps) if m < r)
        groups += len(reps)
    return VelocityPayload(**values), split / groups


@dataclass(frozen=True)
class FrameLayout:
    """Pixel geometry of a displayed frame.

    Markers are QR-finder squares of 7 modules (dark 1, light 1, dark 3, light 1,
    dark 1) listed A, B, C, D by top-left corner. Stripe bands of one module
    run along the segments joining adjacent marker centers, separated from the
    markers by one light module.
    """

    width: int = 400
    height: int = 280
    module: int = 8
    marker_origins: tuple[tuple[int, int], ...] = ((12, 12), (332, 12), (12, 212), (332, 212))
    stripe_period: float = 24.0
    stripe_phase: int = 0
    data_origin: tuple[int, int] = (88, 84)
    rows: int = 16
    cols: int = 32
    cell: int = 7
    background: int = 255
    slot_table_version: int = SLOT_TABLE_VERSION

    def __post_init__(self):
        object.__setattr__(self, "marker_origins", tuple(tuple(int(c) for c in o) for o in self.marker_origins))
        object.__setattr__(self, "data_origin", tuple(int(c) for c in self.data_origin))
        if len(self.marker_origins) != 4:
            raise ValueError("a layout has exactly four markers")
        x0, y0 = self.data_origin
        data = (x0, y0, x0 + self.cols * self.cell, y0 + self.rows * self.cell)
        if data[2] > self.width or data[3] > self.height:
            raise ValueError("data region extends past the raster")
        for mx, my in self.marker_origins:
            s = self.marker_size
            if mx < data[2] and data[0] < mx + s and my < data[3] and data[1] < my + s:
                raise ValueError("data region overlaps a marker")

    @property
    def marker_size(self) -> int:
        return 7 * self.module

    @property
    def marker_centers(self) -> np.ndarray:
        h = (self.marker_size - 1) / 2
        return np.array([[x + h, y + h] for x, y in self.marker_origins], dtype=float)

    @property
    def data_rect(self) -> tuple[int, int, int, int]:
        x0, y0 = self.data_origin
        return x0, y0, self.cols * self.cell, self.rows * self.cell

    def stripe_span(self, i: int, j: int) -> tuple[float, float]:
        """Distances from marker i's center where the stripe band between i and j starts and ends."""
        c = self.marker_centers
        length = float(np.hypot(*(c[j] - c[i])))
        offset = self.marker_size / 2 + self.module
        return offset, length - offset

    def stripe_periods(self, i: int, j: int) -> int:
        a, b = self.stripe_span(i, j)
        return max(1, int(round((b - a) / self.stripe_period)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["marker_origins"] = [list(o) for o in self.marker_origins]
        d["data_origin"] = list(self.data_origin)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> FrameLayout:
        d = dict(d)
        if "marker_origins" in d:
            d["marker_origins"] = tuple(tuple(o) for o in d["marker_origins"])
        if "data_origin" in d:
            d["data_origin"] = tuple(d["data_origin"])
        return cls(**d)


EDGES = ((0, 1), (2, 3), (0, 2), (1, 3))


@dataclass(frozen=True)
class FrameRaster:
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError("a raster is a 2-D grayscale grid")
        px = np.clip(np.floor(px + 0.5), 0, 255).astype(np.uint8) if px.dtype != np.uint8 else px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def save_pgm(self, path) -> None:
        path = Path(path)
        try:
            Image.fromarray(self.pixels).save(path, format="PPM")
        except OSError as exc:
            raise OSError(f"cannot write PGM {path}: {exc}") from exc

    @classmethod
    def load_pgm(cls, path) -> FrameRaster:
        with Image.open(path) as im:
            if im.format != "PPM" or im.mode != "L":
                raise ValueError(f"{path} is not an 8-bit grayscale PGM")
            return cls(np.array(im))


def _draw_marker(canvas: np.ndarray, x: int, y: int, m: int) -> None:
    canvas[y : y + 7 * m, x : x + 7 * m] = 0
    canvas[y + m : y + 6 * m, x + m : x + 6 * m] = 255
    canvas[y + 2 * m : y + 5 * m, x + 2 * m : x + 5 * m] = 0


def _draw_stripes(canvas: np.ndarray, layout: FrameLayout, i: int, j: int) -> None:
    c = layout.marker_centers
    start, end = layout.stripe_span(i, j)
    n = layout.stripe_periods(i, j)
    half = (end - start) / (2 * n)
    m = layout.module
    horizontal = abs(c[j][1] - c[i][1]) < 1e-9
    if horizontal:
        y_lo = int(round(c[i][1] - m / 2 + 0.5))
        xs = np.arange(int(np.ceil(c[i][0] + start - 0.5)), int(np.floor(c[i][0] + end - 0.5)) + 1)
        idx = np.floor((xs + 0.5 - (c[i][0] + start)) / half).astype(int)
        dark = (idx + layout.stripe_phase) % 2 == 0
        canvas[y_lo : y_lo + m, xs[dark]] = 0
    else:
        x_lo = int(round(c[i][0] - m / 2 + 0.5))
        ys = np.arange(int(np.ceil(c[i][1] + start - 0.5)), int(np.floor(c[i][1] + end - 0.5)) + 1)
        idx = np.floor((ys + 0.5 - (c[i][1] + start)) / half).astype(int)
        dark = (idx + layout.stripe_phase) % 2 == 0
        canvas[ys[dark], x_lo : x_lo + m] = 0


def render_bits(bits, layout: FrameLayout, mode: str = FFT) -> FrameRaster:
    if mode not in MODES:
        raise ValueError(f"unknown modulation mode {mode!r}")
    bits = np.asarray(bits)
    if bits.size > capacity(layout.rows, layout.cols, mode):
        raise CapacityExceeded(f"{bits.size} bits do not fit a {layout.rows}x{layout.cols} {mode} grid")
    canvas = np.full((layout.height, layout.width), float(layout.background))
    for x, y in layout.marker_origins:
        _draw_marker(canvas, x, y, layout.module)
    for i, j in EDGES:
        _draw_stripes(canvas, layout, i, j)
    x0, y0, w, h = layout.data_rect
    canvas[y0 : y0 + h, x0 : x0 + w] = modulate(bits, layout.rows, layout.cols, mode, layout.cell)
    return FrameRaster(canvas)


def render_frame(payload: VelocityPayload, layout: FrameLayout | None = None, mode: str = FFT) -> FrameRaster:
    return render_bits(payload_to_bits(payload), layout or FrameLayout(), mode)


def extract_bits(raster, layout: FrameLayout, n_bits: int, mode: str = FFT) -> np.ndarray:
    """Demodulate the data region of a raster that is already in layout coordinates."""
    px = raster.pixels if isinstance(raster, FrameRaster) else np.asarray(raster)
    x0, y0, w, h = layout.data_rect
    return demodulate(px[y0 : y0 + h, x0 : x0 + w].astype(float), layout.rows, layout.cols, n_bits, mode)


def decode_frame(raster, layout: FrameLayout | None = None, mode: str = FFT, markers=None) -> VelocityPayload:
    """Detect, rectify, demodulate and majority-decode one captured frame.

    ``markers`` may carry already-detected feature pixels to skip detection.
    """
    from .detect import detect_markers

    layout = layout or FrameLayout()
    px = raster.pixels if isinstance(raster, FrameRaster) else np.asarray(raster)
    if markers is None:
        try:
            markers = detect_markers(px, layout)
        except DetectionFailure as exc:
            raise DecodeFailure("detection", exc) from exc
    x0, y0, w, h = layout.data_rect
    try:
        H = estimate_homography(markers.as_array(), layout.marker_centers - np.array([x0, y0]))
        block = rectify(px, H, (h, w), fill=layout.background)
    except (DegenerateConfiguration, np.linalg.LinAlgError) as exc:
        raise DecodeFailure("rectification", exc) from exc
    bits = demodulate(block, layout.rows, layout.cols, PAYLOAD_BITS, mode)
    payload, split = bits_to_payload(bits)
    if split > MAX_SPLIT_VOTE_FRACTION:
        raise DecodeFailure("demodulation", f"{split:.0%} of repetition groups disagree")
    return payload
