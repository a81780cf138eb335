"""Scenario configuration, JSON round trip, and the three experiment presets."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..channel import ChannelConfig, DisplayQueueConfig
from ..control import DesiredPose, GainConfig
from ..ekf import EkfNoise
from ..geometry import Bounds, RelativeState, Twist
from ..scc.frame import FrameLayout
from ..sensing import CameraIntrinsics, FovLimits, ScreenGeometry, check_visibility

IDEAL = "ideal"
RASTER = "raster"
OISAC = "oisac"
EKF = "ekf"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    leader_profile: tuple = ((90.0, Twist(0.125, 0.1)),)
    s0: RelativeState = RelativeState(1.25, -0.3, 0.0)
    desired: tuple = ((0.0, DesiredPose(0.75, 0.0, math.pi / 6)),)
    sensing: str = IDEAL
    estimator: str = OISAC
    duration: float | None = None
    seed: int = 0
    f_cam: float = 10.0
    f_v: float = 20.0
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    queue: DisplayQueueConfig = field(default_factory=DisplayQueueConfig)
    gains: GainConfig = field(default_factory=GainConfig)
    bounds: Bounds = Bounds(0.6, 0.2, 0.5, 0.2)
    gate_N: int = 5
    gate_dt: float = 0.1
    n_bits: int = 8
    camera: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    screen: ScreenGeometry = field(default_factory=ScreenGeometry)
    fov: FovLimits = field(default_factory=FovLimits)
    layout: FrameLayout = field(default_factory=FrameLayout)
    ekf_noise: EkfNoise = field(default_factory=EkfNoise)
    ekf_p0: float = 0.1
    pixel_quantize: bool = False
    pixel_noise: float = 0.0
    camera_background: float = 40.0
    visibility_timeout: float = 1.0
    settle_band: float = 0.03

    @property
    def f_pub(self) -> float:
        return self.queue.f_pub

    @property
    def total_duration(self) -> float:
        if self.duration is not None:
            return self.duration
        return sum(d for d, _ in self.leader_profile)

    def validate(self) -> None:
        if self.sensing not in (IDEAL, RASTER):
            raise ConfigError(f"unknown sensing mode {self.sensing!r}")
        if self.estimator not in (OISAC, EKF):
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if any(d <= 0 for d, _ in self.leader_profile):
            raise ConfigError("profile segment durations must be positive")
        if min(self.f_cam, self.f_v, self.f_pub) <= 0:
            raise ConfigError("rates must be positive")
        for rate in (self.f_cam, self.f_v, self.f_pub):
            if abs(1000.0 / rate - round(1000.0 / rate)) > 1e-9:
                raise ConfigError(f"rate {rate} Hz does not divide the 1 ms clock")
        if self.total_duration < 0:
            raise ConfigError("duration must be non-negative")
        if not self.desired or self.desired[0][0] > 0:
            raise ConfigError("the desired-pose schedule must start at t = 0")
        if check_visibility(self.s0, self.fov, self.screen) is not None:
            raise ConfigError("initial relative state is not visible")
        for _, d in self.desired:
            if check_visibility(RelativeState(d.x_bar, d.y_bar, d.gamma_bar), self.fov, self.screen) is not None:
                raise ConfigError(f"desired pose {d} lies outside the visible region")

    def to_dict(self) -> dict:
        return {
            "leader_profile": [[d, u.v, u.omega] for d, u in self.leader_profile],
            "s0": [self.s0.x_lf, self.s0.y_lf, self.s0.gamma],
            "desired": [[t, d.x_bar, d.y_bar, d.gamma_bar] for t, d in self.desired],
            "sensing": self.sensing,
            "estimator": self.estimator,
            "duration": self.duration,
            "seed": self.seed,
            "f_cam": self.f_cam,
            "f_v": self.f_v,
            "channel": self.channel.to_dict(),
            "queue": self.queue.to_dict(),
            "gains": [self.gains.k1, self.gains.k2, self.gains.k3],
            "bounds": [self.bounds.v_max, self.bounds.omega_max, self.bounds.vdot_max, self.bounds.omegadot_max],
            "gate_N": self.gate_N,
            "gate_dt": self.gate_dt,
            "n_bits": self.n_bits,
            "camera": _plain(self.camera),
            "screen": _plain(self.screen),
            "fov": _plain(self.fov),
            "layout": self.layout.to_dict(),
            "ekf_noise": self.ekf_noise.to_dict(),
            "ekf_p0": self.ekf_p0,
            "pixel_quantize": self.pixel_quantize,
            "pixel_noise": self.pixel_noise,
            "camera_background": self.camera_background,
            "visibility_timeout": self.visibility_timeout,
            "settle_band": self.settle_band,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ScenarioConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        try:
            if "leader_profile" in kw:
                kw["leader_profile"] = tuple((float(t), Twist(v, w)) for t, v, w in kw["leader_profile"])
            if "s0" in kw:
                kw["s0"] = RelativeState(*kw["s0"])
            if "desired" in kw:
                kw["desired"] = tuple((float(t), DesiredPose(x, y, g)) for t, x, y, g in kw["desired"])
            if "channel" in kw:
                kw["channel"] = ChannelConfig.from_dict(kw["channel"])
            if "queue" in kw:
                kw["queue"] = DisplayQueueConfig.from_dict(kw["queue"])
            if "gains" in kw:
                kw["gains"] = GainConfig(*kw["gains"])
            if "bounds" in kw:
                kw["bounds"] = Bounds(*kw["bounds"])
            if "camera" in kw:
                kw["camera"] = CameraIntrinsics(**kw["camera"])
            if "screen" in kw:
                kw["screen"] = ScreenGeometry(**kw["screen"])
            if "fov" in kw:
                kw["fov"] = FovLimits(**kw["fov"])
            if "layout" in kw:
                kw["layout"] = FrameLayout.from_dict(kw["layout"])
            if "ekf_noise" in kw:
                kw["ekf_noise"] = EkfNoise(tuple(kw["ekf_noise"]["Q"]), tuple(kw["ekf_noise"]["R"]))
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> ScenarioConfig:
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> ScenarioConfig:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(text)


def _plain(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def preset_circular(**overrides) -> ScenarioConfig:
    return replace(ScenarioConfig(), **overrides)


BRAKE_CRUISE = 30.0
BRAKE_TAIL = 10.0


def preset_braking(v_level: float, **overrides) -> ScenarioConfig:
    cfg = ScenarioConfig(
        leader_profile=((BRAKE_CRUISE, Twist(v_level, 0.0)), (BRAKE_TAIL, Twist(0.0, 0.0))),
        s0=RelativeState(0.75, 0.0, 0.0),
        desired=((0.0, DesiredPose(0.75, 0.0, 0.0)),),
    )
    return replace(cfg, **overrides)


USHAPE_STRAIGHT = 20.0
USHAPE_TURN = 30.0


def preset_ushape(**overrides) -> ScenarioConfig:
    straight = DesiredPose(0.6, 0.0, 0.0)
    turning = DesiredPose(0.6, 0.15, math.pi / 6)
    t1 = USHAPE_STRAIGHT
    t2 = t1 + USHAPE_TURN
    cfg = ScenarioConfig(
        leader_profile=(
            (USHAPE_STRAIGHT, Twist(0.3, 0.0)),
            (USHAPE_TURN, Twist(0.1, math.pi / 30)),
            (USHAPE_STRAIGHT, Twist(0.3, 0.0)),
        ),
        s0=RelativeState(0.9, 0.1, 0.31),
        desired=((0.0, straight), (t1, turning), (t2, straight)),
    )
    return replace(cfg, **overrides)


PRESETS = {"circular": preset_circular, "braking": preset_braking, "ushape": preset_ushape}
