"""The simulation loop.

Time runs on an integer millisecond clock. Only ticks where something is
scheduled are visited; between ticks both robots follow constant-twist arcs.
Within a tick the order is publish, display, capture, control, smooth, and
the new twists then apply to the following interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..channel import DisplayQueue, apply_channel_packet, apply_channel_raster
from ..control import (
    GateState,
    SmootherState,
    control,
    gate_velocity,
    lyapunov,
    smooth,
    tracking_error,
)
from ..ekf import EkfState, NumericalFailure, predict, update
from ..geometry import ZERO_TWIST, Pose2D, RelativeState, Twist, integrate_unicycle, relative_state
from ..scc.errors import DecodeFailure, DegenerateConfiguration, DetectionFailure
from ..scc.detect import detect_markers
from ..scc.frame import VelocityPayload, decode_frame, render_frame
from ..scc.quantize import dequantize, quantize, velocity_quantizers
from ..sensing import DegenerateObservation, NotVisible, estimate_pose, observe
from .capture import capture
from .config import EKF, RASTER, ScenarioConfig


OK = "ok"
DROPPED = "dropped"
DECODE_FAILED = "decode_failed"
DETECT_FAILED = "detect_failed"
NOT_VISIBLE = "not_visible"
BLANK = "blank"
NO_LINK = "no_link"


@dataclass(frozen=True)
class SimRecord:
    t: float
    leader: Pose2D
    follower: Pose2D
    s: RelativeState
    s_est: RelativeState | None
    u_hat: Twist
    u_l: Twist
    u_cmd: Twist
    u_f: Twist
    status: str
    gated: bool
    eps: tuple[float, float, float]
    V: float


@dataclass
class Metrics:
    steady_band: tuple = (0.0, 0.0, 0.0)
    rmse: tuple = (0.0, 0.0, 0.0)
    settling_time: tuple = (None, None, None)
    braking_distance: float = 0.0
    follower_stopped: bool = True
    packets_sent: int = 0
    packets_dropped: int = 0
    packets_gated: int = 0
    decode_failures: int = 0
    frames: int = 0
    visibility_lost: bool = False
    end_time: float = 0.0
    extra: dict = field(default_factory=dict)


def _follower_start(s0: RelativeState, leader: Pose2D) -> Pose2D:
    theta_f = leader.theta - s0.gamma
    c, s = math.cos(theta_f), math.sin(theta_f)
    return Pose2D(leader.x - (c * s0.x_lf - s * s0.y_lf), leader.y - (s * s0.x_lf + c * s0.y_lf), theta_f)


def _profile_target(cfg: ScenarioConfig, t_ms: int, bounds_ms) -> Twist:
    for end_ms, (_, u) in zip(bounds_ms, cfg.leader_profile):
        if t_ms < end_ms:
            return u
    return ZERO_TWIST


def _desired(cfg: ScenarioConfig, t: float):
    current = cfg.desired[0][1]
    for start, d in cfg.desired:
        if start <= t + 1e-9:
            current = d
    return current


def _accel(prev: Twist, cur: Twist, dt: float) -> float:
    tangential = (cur.v - prev.v) / dt
    return math.hypot(tangential, cur.v * cur.omega)


def compute_metrics(records: list[SimRecord], cfg: ScenarioConfig, m: Metrics) -> Metrics:
    if not records:
        return m
    t = np.array([r.t for r in records])
    E = np.abs(np.array([r.eps for r in records]))
    steady = E[t >= 0.5 * cfg.total_duration]
    if steady.size == 0:
        steady = E[-1:]
    m.steady_band = tuple(float(v) for v in steady.max(axis=0))
    m.rmse = tuple(float(v) for v in np.sqrt((E ** 2).mean(axis=0)))
    settle = []
    for i in range(3):
        outside = np.flatnonzero(E[:, i] > cfg.settle_band)
        if outside.size == 0:
            settle.append(float(t[0]))
        elif outside[-1] + 1 < len(t):
            settle.append(float(t[outside[-1] + 1]))
        else:
            settle.append(None)
    m.settling_time = tuple(settle)
    return m


def run(cfg: ScenarioConfig) -> tuple[list[SimRecord], Metrics]:
    cfg.validate()
    total_ms = int(round(1000 * cfg.total_duration))
    metrics = Metrics()
    if total_ms <= 0:
        return [], metrics

    seeds = np.random.SeedSequence(cfg.seed).spawn(3)
    rng_channel, rng_pixels, rng_raster = (np.random.default_rng(s) for s in seeds)

    pub_ms = int(round(1000 / cfg.f_pub))
    cam_ms = int(round(1000 / cfg.f_cam))
    fv_ms = int(round(1000 / cfg.f_v))
    seg_ends, acc = [], 0
    for d, _ in cfg.leader_profile:
        acc += int(round(1000 * d))
        seg_ends.append(acc)

    bounds = cfg.bounds
    q_v, q_w = velocity_quantizers(bounds.v_max, bounds.omega_max, cfg.n_bits)
    a = (bounds.vdot_max, bounds.omegadot_max)

    leader = Pose2D(0.0, 0.0, 0.0)
    follower = _follower_start(cfg.s0, leader)
    lead_sm = SmootherState(ZERO_TWIST, a, cfg.f_v)
    fol_sm = SmootherState(ZERO_TWIST, a, cfg.f_v)
    u_target = ZERO_TWIST
    accel_mag = 0.0

    gate = GateState(ZERO_TWIST, bounds, cfg.gate_N, cfg.gate_dt)
    ekf = None
    s_est: RelativeState | None = None
    u_hat = ZERO_TWIST

    def payload_of(t_ms: int, seq: int) -> VelocityPayload:
        u = lead_sm.u_current
        return VelocityPayload(quantize(u.v, q_v), quantize(u.omega, q_w), seq % (1 << 16), t_ms % (1 << 32))

    queue = DisplayQueue(cfg.queue)
    # the screen is already showing the leader's initial state when the run starts
    queue.on_screen = (0, payload_of(0, 0))
    seq = 1
    frame_cache: dict = {}

    records: list[SimRecord] = []
    invisible_since: int | None = None
    leader_moved = False
    stop_ms: int | None = None
    braking_done = False
    brake_path = 0.0

    t_prev = 0
    t = 0
    while t < total_ms:
        # advance both robots over [t_prev, t)
        if t > t_prev:
            dt = (t - t_prev) / 1000.0
            leader = integrate_unicycle(leader, lead_sm.u_current, dt)
            follower = integrate_unicycle(follower, fol_sm.u_current, dt)
            if stop_ms is not None and not braking_done:
                brake_path += abs(fol_sm.u_current.v) * dt

        # publish
        if t % pub_ms == 0:
            queue.publish(t, payload_of(t, seq))
            seq += 1
            metrics.packets_sent += 1
        # display
        queue.service(t)

        # EKF time update over the last smoother interval
        if cfg.estimator == EKF and ekf is not None and t % fv_ms == 0 and t > 0:
            ekf = predict(ekf, fol_sm.u_current, fv_ms / 1000.0, cfg.ekf_noise)

        # capture + control
        if t % cam_ms == 0:
            metrics.frames += 1
            s_true = relative_state(leader, follower)
            status = OK
            gated = False
            received: Twist | None = None
            measured: RelativeState | None = None
            try:
                if cfg.sensing == RASTER:
                    # raises NotVisible if the screen leaves the field of view
                    observe(s_true, cfg.camera, cfg.screen, cfg.fov)
                    ts, shown = queue.on_screen
                    key = (shown, cfg.layout)
                    screen = frame_cache.get(key)
                    if screen is None:
                        frame_cache.clear()
                        screen = frame_cache[key] = render_frame(shown, cfg.layout)
                    img = capture(screen, s_true, cfg.camera, cfg.screen, cfg.layout, cfg.camera_background)
                    img = apply_channel_raster(img, accel_mag, cfg.channel, rng_raster)
                    try:
                        markers = detect_markers(img, cfg.layout)
                        measured = estimate_pose(markers, cfg.camera, cfg.screen)
                    except (DetectionFailure, DegenerateObservation):
                        status = DETECT_FAILED
                        metrics.decode_failures += 1
                        markers = None
                    if markers is not None and cfg.estimator != EKF:
                        try:
                            payload = decode_frame(img, cfg.layout, markers=markers)
                            received = Twist(dequantize(payload.code_v, q_v), dequantize(payload.code_omega, q_w))
                        except DecodeFailure:
                            status = DECODE_FAILED
                            metrics.decode_failures += 1
                else:
                    pixels = observe(
                        s_true, cfg.camera, cfg.screen, cfg.fov,
                        quantize=cfg.pixel_quantize, noise_sigma=cfg.pixel_noise, rng=rng_pixels,
                    )
                    measured = estimate_pose(pixels, cfg.camera, cfg.screen)
                    if cfg.estimator != EKF:
                        ts, shown = queue.on_screen
                        payload = apply_channel_packet(shown, s_true, cfg.channel, rng_channel)
                        if payload is None:
                            status = DROPPED
                            metrics.packets_dropped += 1
                        else:
                            received = Twist(dequantize(payload.code_v, q_v), dequantize(payload.code_omega, q_w))
                invisible_since = None
            except (NotVisible, DegenerateObservation, DegenerateConfiguration):
                status = NOT_VISIBLE
                if invisible_since is None:
                    invisible_since = t
                if t - invisible_since >= int(round(1000 * cfg.visibility_timeout)):
                    metrics.visibility_lost = True
                    break

            if measured is not None:
                s_est = measured
            if cfg.estimator == EKF:
                if status == OK:
                    status = NO_LINK
                if measured is not None:
                    if ekf is None:
                        ekf = EkfState.initial(measured, cfg.ekf_p0)
                    else:
                        try:
                            ekf = update(ekf, measured, cfg.ekf_noise)
                        except NumericalFailure:
                            ekf = EkfState.initial(measured, cfg.ekf_p0)
                if ekf is not None:
                    u_hat = ekf.velocity
            else:
                rejected_before = gate.rejected
                u_hat = gate_velocity(received, gate)
                gated = gate.rejected > rejected_before
                metrics.packets_gated += int(gated)

            s_bar = _desired(cfg, t / 1000.0)
            if s_est is not None:
                u_target = bounds.clip(control(s_est, s_bar, u_hat, cfg.gains))
            else:
                u_target = ZERO_TWIST

        # smooth
        if t % fv_ms == 0:
            prev = fol_sm.u_current
            smooth(u_target, fol_sm)
            accel_mag = _accel(prev, fol_sm.u_current, fv_ms / 1000.0)
            lead_prev = lead_sm.u_current
            lead_goal = _profile_target(cfg, t, seg_ends)
            smooth(lead_goal, lead_sm)
            if lead_sm.u_current.v > 0:
                leader_moved = True
            if stop_ms is None and leader_moved and lead_prev.v > 0 and lead_sm.u_current.v <= 0:
                stop_ms = t
            if stop_ms is not None and not braking_done and fol_sm.u_current.v <= 0:
                braking_done = True

        if t % cam_ms == 0:
            s_bar = _desired(cfg, t / 1000.0)
            s_true = relative_state(leader, follower)
            eps = tracking_error(s_true, s_bar)
            records.append(SimRecord(
                t=t / 1000.0,
                leader=leader,
                follower=follower,
                s=s_true,
                s_est=s_est,
                u_hat=u_hat,
                u_l=lead_sm.u_current,
                u_cmd=u_target,
                u_f=fol_sm.u_current,
                status=status,
                gated=gated,
                eps=tuple(float(e) for e in eps),
                V=lyapunov(eps),
            ))

        t_prev = t
        nxt = [((t // p) + 1) * p for p in (pub_ms, cam_ms, fv_ms)]
        if queue.finish_ms is not None and queue.finish_ms > t:
            nxt.append(queue.finish_ms)
        t = min(min(nxt), total_ms)

    # the last interval runs up to the end of the scenario
    if not metrics.visibility_lost and t > t_prev and stop_ms is not None and not braking_done:
        brake_path += abs(fol_sm.u_current.v) * (t - t_prev) / 1000.0
    metrics.braking_distance = brake_path if stop_ms is not None else 0.0
    metrics.follower_stopped = braking_done or stop_ms is None
    metrics.end_time = (records[-1].t if records else 0.0)
    compute_metrics(records, cfg, metrics)
    return records, metrics

