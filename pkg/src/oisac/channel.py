"""Optical channel loss, raster corruption, and the transmitter display queue."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter1d

from .geometry import RelativeState
from .scc.frame import FrameRaster

# measured loss rate vs distance (cm) and vs view angle (degrees)
TABLE_DISTANCE = (
    (50, 0.005), (60, 0.006), (70, 0.007), (80, 0.008), (90, 0.010), (100, 0.011),
    (110, 0.017), (120, 0.028), (130, 0.057), (140, 0.102), (150, 0.357),
)
TABLE_ANGLE = ((0, 0.007), (10, 0.008), (20, 0.010), (30, 0.010), (40, 0.011), (50, 0.013))

PACKET = "packet"
RASTER = "raster"


def _check_curve(curve, name):
    xs = [float(x) for x, _ in curve]
    ps = [float(p) for _, p in curve]
    if len(xs) < 2:
        raise ValueError(f"{name} curve needs at least two points")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError(f"{name} abscissae must be strictly increasing")
    if any(not 0.0 <= p <= 1.0 for p in ps):
        raise ValueError(f"{name} probabilities must lie in [0, 1]")
    return tuple(zip(xs, ps))


@dataclass(frozen=True)
class PlrTable:
    distance: tuple = TABLE_DISTANCE
    angle: tuple = TABLE_ANGLE

    def __post_init__(self):
        object.__setattr__(self, "distance", _check_curve(self.distance, "distance"))
        object.__setattr__(self, "angle", _check_curve(self.angle, "angle"))

    def to_dict(self) -> dict:
        return {"distance": [list(p) for p in self.distance], "angle": [list(p) for p in self.angle]}

    @classmethod
    def from_dict(cls, d: dict) -> PlrTable:
        return cls(tuple(map(tuple, d["distance"])), tuple(map(tuple, d["angle"])))


def interp_curve(x: float, curve) -> float:
    """Piecewise-linear; flat below the table, ramps to 1 over one extra step above it."""
    xs = np.array([p[0] for p in curve])
    ps = np.array([p[1] for p in curve])
    if x <= xs[-1]:
        return float(np.interp(x, xs, ps))
    step = xs[-1] - xs[-2]
    return float(min(1.0, ps[-1] + (1.0 - ps[-1]) * (x - xs[-1]) / step))


def plr_distance(distance: float, table: PlrTable | None = None) -> float:
    # convert the table, not the query, so table abscissae hit exactly
    curve = [(d / 100.0, p) for d, p in (table or PlrTable()).distance]
    return interp_curve(distance, curve)


def plr_angle(angle: float, table: PlrTable | None = None) -> float:
    curve = [(math.radians(a), p) for a, p in (table or PlrTable()).angle]
    return interp_curve(abs(angle), curve)


def plr(distance: float, view_angle: float, table: PlrTable | None = None) -> float:
    """Frame loss probability, treating the distance and angle effects as independent."""
    if distance < 0:
        raise ValueError("distance must be non-negative")
    if abs(view_angle) >= math.pi / 2:
        raise ValueError("view angle must be inside (-pi/2, pi/2)")
    pd = plr_distance(distance, table)
    pa = plr_angle(view_angle, table)
    return 1.0 - (1.0 - pd) * (1.0 - pa)


@dataclass(frozen=True)
class ChannelConfig:
    plr: PlrTable = field(default_factory=PlrTable)
    noise_sigma: float = 0.0
    blur_gain: float = 10.0
    mode: str = PACKET
    seed: int = 0

    def __post_init__(self):
        if self.noise_sigma < 0 or self.blur_gain < 0:
            raise ValueError("noise_sigma and blur_gain must be non-negative")
        if self.mode not in (PACKET, RASTER):
            raise ValueError(f"unknown channel mode {self.mode!r}")

    def to_dict(self) -> dict:
        return {"plr": self.plr.to_dict(), "noise_sigma": self.noise_sigma,
                "blur_gain": self.blur_gain, "mode": self.mode, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> ChannelConfig:
        d = dict(d)
        if "plr" in d:
            d["plr"] = PlrTable.from_dict(d["plr"])
        return cls(**d)


def link_loss(s: RelativeState, cfg: ChannelConfig) -> float:
    return plr(math.hypot(s.x_lf, s.y_lf), min(abs(s.gamma), math.nextafter(math.pi / 2, 0)), cfg.plr)


def apply_channel_packet(payload, s: RelativeState, cfg: ChannelConfig, rng=None):
    """Deliver ``payload`` or drop it (returns None). Loss only; contents are never altered."""
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    return None if rng.random() < link_loss(s, cfg) else payload


def blur_length(accel_mag: float, cfg: ChannelConfig) -> int:
    return int(round(cfg.blur_gain * abs(accel_mag)))


def apply_channel_raster(raster, accel_mag: float, cfg: ChannelConfig, rng=None) -> FrameRaster:
    """Horizontal box motion blur scaled by acceleration, then Gaussian intensity noise."""
    px = raster.pixels if isinstance(raster, FrameRaster) else np.asarray(raster)
    img = px.astype(float)
    n = blur_length(accel_mag, cfg)
    if n > 1:
        img = uniform_filter1d(img, n, axis=1, mode="nearest")
    if cfg.noise_sigma > 0:
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        img = img + rng.normal(0.0, cfg.noise_sigma, img.shape)
    return FrameRaster(np.clip(img, 0, 255))


DROP_OLDEST = "drop-oldest"
DROP_NEWEST = "drop-newest"


@dataclass(frozen=True)
class DisplayQueueConfig:
    f_pub: float = 20.0
    T_tx: float = 0.06
    N_q: int = 1
    policy: str = DROP_OLDEST

    def __post_init__(self):
        if self.f_pub <= 0 or self.T_tx <= 0:
            raise ValueError("f_pub and T_tx must be positive")
        if self.N_q < 1:
            raise ValueError("queue capacity must be at least 1")
        if self.policy not in (DROP_OLDEST, DROP_NEWEST):
            raise ValueError(f"unknown queue policy {self.policy!r}")

    @property
    def tx_ms(self) -> int:
        return max(1, int(round(1000 * self.T_tx)))

    @property
    def pub_ms(self) -> int:
        return max(1, int(round(1000 / self.f_pub)))

    def to_dict(self) -> dict:
        return {"f_pub": self.f_pub, "T_tx": self.T_tx, "N_q": self.N_q, "policy": self.policy}

    @classmethod
    def from_dict(cls, d: dict) -> DisplayQueueConfig:
        return cls(**d)


class DisplayQueue:
    """Subscriber queue feeding a display that needs T_tx to render each message.

    Times are integer milliseconds. At equal times a publish is handled before
    the display finishes or starts a frame.
    """

    def __init__(self, cfg: DisplayQueueConfig):
        self.cfg = cfg
        self.queue: deque = deque()
        self.pending = None  # (timestamp_ms, item) being rendered
        self.finish_ms: int | None = None
        self.on_screen = None  # (timestamp_ms, item)
        self.shown: list[tuple] = []  # (show time, message timestamp, item)
        self.evicted = 0

    def publish(self, t_ms: int, item) -> None:
        if len(self.queue) >= self.cfg.N_q:
            self.evicted += 1
            if self.cfg.policy == DROP_NEWEST:
                return
            self.queue.popleft()
        self.queue.append((t_ms, item))

    def service(self, t_ms: int) -> None:
        if self.finish_ms is not None and self.finish_ms <= t_ms:
            self.on_screen = self.pending
            self.shown.append((self.finish_ms, *self.pending))
            self.pending = self.finish_ms = None
        if self.finish_ms is None and self.queue:
            self.pending = self.queue.popleft()
            self.finish_ms = t_ms + self.cfg.tx_ms

    def tick(self, t_ms: int, item=None, publish: bool = False) -> None:
        if publish:
            self.publish(t_ms, item)
        self.service(t_ms)

    @property
    def next_event_ms(self) -> int | None:
        return self.finish_ms


def run_display_queue(cfg: DisplayQueueConfig, publish_times_ms, items=None) -> DisplayQueue:
    """Feed a publish schedule through a queue until it drains."""
    q = DisplayQueue(cfg)
    items = list(items) if items is not None else [None] * len(publish_times_ms)
    pubs = deque(zip(publish_times_ms, items))
    while pubs or q.finish_ms is not None:
        upcoming = [q.finish_ms] if q.finish_ms is not None else []
        if pubs:
            upcoming.append(pubs[0][0])
        t = min(upcoming)
        if pubs and pubs[0][0] == t:
            q.tick(t, pubs.popleft()[1], publish=True)
        else:
            q.tick(t)
    return q


def simulate_display_queue(cfg: DisplayQueueConfig, duration: float) -> float:
    """Mean publish-to-screen delay (seconds), dropping the first 10% of displayed messages."""
    n = int(duration * 1000) // cfg.pub_ms
    q = run_display_queue(cfg, [k * cfg.pub_ms for k in range(n)])
    delays = [shown - ts for shown, ts, _ in q.shown]
    steady = delays[len(delays) // 10 :]
    if not steady:
        raise ValueError("duration too short to display any message")
    return float(np.mean(steady)) / 1000.0


def displayed_payload(t: float, history, cfg: DisplayQueueConfig):
    """What is on screen at time ``t`` given (publish time s, payload) history; None before the first frame."""
    t_ms = int(round(1000 * t))
    past = [(int(round(1000 * tp)), p) for tp, p in history if tp <= t]
    q = run_display_queue(cfg, [tp for tp, _ in past], [p for _, p in past])
    on = [item for show_ms, _, item in q.shown if show_ms <= t_ms]
    return on[-1] if on else None
