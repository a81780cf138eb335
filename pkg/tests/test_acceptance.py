"""Acceptance criteria AC1 to AC9.

Each check returns (passed, detail). Under pytest every criterion is one test
and the summary prints one PASS/FAIL line per criterion; run this file
directly to get the same lines without pytest.
"""

import itertools
import math
import sys
import time

import numpy as np
import pytest

from oisac.channel import TABLE_ANGLE, TABLE_DISTANCE, ChannelConfig, DisplayQueueConfig, apply_channel_packet, plr, simulate_display_queue
from oisac.control import GateState, error_bounds, lyapunov, lyapunov_rate
from oisac.geometry import ZERO_TWIST, Bounds, RelativeState, Twist, integrate_unicycle, relative_state
from oisac.scc import VelocityPayload, decode_frame, render_frame, velocity_quantizers
from oisac.scc import duplication as dup
from oisac.scc.homography import view_angle_homography, warp
from oisac.scc.frame import FrameRaster
from oisac.sensing import CameraIntrinsics, FovLimits, NotVisible, ScreenGeometry, check_visibility, estimate_pose, observe
from oisac.sim import preset_braking, preset_circular, preset_ushape, run
from oisac.sim.config import EKF, OISAC
from oisac.sim.experiments import BRAKE_LEVELS, braking_experiment, lyapunov_check
from oisac.sim.output import records_csv

K, GEOM, FOV = CameraIntrinsics(), ScreenGeometry(), FovLimits()
BOUNDS = Bounds(0.6, 0.2, 0.5, 0.2)


def ac1():
    t0 = time.perf_counter()
    _, m = run(preset_circular())
    dt = time.perf_counter() - t0
    band = m.steady_band
    ok = band[0] <= 0.03 and band[1] <= 0.03 and band[2] <= 0.03 and dt < 5.0
    return ok, f"steady |eps| = ({band[0]:.4f}, {band[1]:.4f}, {band[2]:.4f}) vs 0.03; runtime {dt:.2f} s vs 5 s"


def ac2():
    t0 = time.perf_counter()
    rows = braking_experiment(BRAKE_LEVELS, reps=10)
    dt = time.perf_counter() - t0
    mean = {(lv, est): d for lv, est, d, _, _ in rows}
    oisac = [mean[(lv, OISAC)] for lv in BRAKE_LEVELS]
    ratio = [mean[(lv, EKF)] / mean[(lv, OISAC)] for lv in BRAKE_LEVELS]
    ok = max(oisac) <= 0.08 and min(ratio) >= 2.0 and dt < 60.0
    return ok, (
        f"oisac mean max {max(oisac):.4f} m vs 0.08; EKF/OISAC ratio per level "
        f"[{', '.join(f'{r:.2f}' for r in ratio)}] vs 2; runtime {dt:.1f} s vs 60 s"
    )


def _transients(records, switches, window=10.0):
    return [max(abs(r.eps[0]) for r in records if t <= r.t < t + window) for t in switches]


def ac3():
    cfg = preset_ushape()
    switches = [t for t, _ in cfg.desired[1:]]
    rec_o, m_o = run(cfg)
    rec_e, m_e = run(preset_ushape(estimator=EKF))
    tr_o, tr_e = _transients(rec_o, switches), _transients(rec_e, switches)
    consts = error_bounds(BOUNDS, GateState(ZERO_TWIST, BOUNDS), *velocity_quantizers(0.6, 0.2, 8))
    within = [
        abs(r.u_hat.v - r.u_l.v) <= consts.delta_v_plus and abs(r.u_hat.omega - r.u_l.omega) <= consts.delta_omega_plus
        for r in rec_o
    ]
    frac = float(np.mean(within))
    ok = not m_o.visibility_lost and not m_e.visibility_lost and all(a < b for a, b in zip(tr_o, tr_e)) and frac >= 0.95
    return ok, (
        f"visibility kept {not (m_o.visibility_lost or m_e.visibility_lost)}; switch transients max|eps_x| "
        f"oisac {[round(x, 4) for x in tr_o]} vs ekf {[round(x, 4) for x in tr_e]}; u_hat within gate bounds {100 * frac:.1f}% vs 95%"
    )


REFERENCE_DELAYS = {1: 0.06, 10: 0.67, 20: 1.38, 30: 2.03, 40: 2.55, 50: 3.21}


def ac4():
    t0 = time.perf_counter()
    got = {n: simulate_display_queue(DisplayQueueConfig(N_q=n), 60.0) for n in REFERENCE_DELAYS}
    dt = time.perf_counter() - t0
    rel = {n: abs(got[n] - REFERENCE_DELAYS[n]) / REFERENCE_DELAYS[n] for n in REFERENCE_DELAYS}
    ok = all(r <= 0.15 for r in rel.values()) and dt < 1.0
    detail = ", ".join(f"N={n}: {got[n]:.3f} vs {REFERENCE_DELAYS[n]} ({100 * rel[n]:.0f}%)" for n in REFERENCE_DELAYS)
    return ok, f"{detail}; runtime {dt:.2f} s vs 1 s"


def ac5():
    exact = all(plr(d / 100, 0.0) == 1 - (1 - p) * (1 - TABLE_ANGLE[0][1]) for d, p in TABLE_DISTANCE)
    exact &= all(plr(0.5, math.radians(a)) == 1 - (1 - TABLE_DISTANCE[0][1]) * (1 - p) for a, p in TABLE_ANGLE)
    rng = np.random.default_rng(5)
    s = RelativeState(1.0, 0.0, 0.0)
    cfg = ChannelConfig()
    drops = sum(apply_channel_packet(1, s, cfg, rng) is None for _ in range(100_000))
    freq, model = drops / 1e5, plr(1.0, 0.0)
    ok = exact and abs(freq - model) <= 0.005
    return ok, f"table abscissae exact {exact}; drop frequency {freq:.5f} vs model {model:.5f} (tol 0.005)"


def ac6():
    rng = np.random.default_rng(6)
    clean = 0
    for _ in range(256):
        p = VelocityPayload(*(int(rng.integers(0, 2**w)) for w in (8, 8, 16, 32)))
        clean += decode_frame(render_frame(p)) == p
    dup_ok = True
    for byte in range(256):
        block = np.array(dup.expand_bits(byte))
        start = 0
        for r in dup.BYTE_REPEATS:
            for k in range((r - 1) // 2 + 1):
                for pos in itertools.combinations(range(start, start + r), k):
                    b = block.copy()
                    b[list(pos)] ^= 1
                    dup_ok &= dup.collapse_bits(b)[0] == byte
            start += r
    warped = []
    p = VelocityPayload(99, 150, 12, 3456)
    raster = render_frame(p)
    for deg in range(0, 51, 10):
        H = view_angle_homography(raster.width, raster.height, math.radians(deg))
        warped.append(decode_frame(FrameRaster(warp(raster.pixels, H, (480, 640), fill=255.0))) == p)
    ok = clean == 256 and dup_ok and all(warped)
    return ok, f"clean identity {clean}/256; duplication correction exhaustive {dup_ok}; warps 0..50 deg decoded {sum(warped)}/{len(warped)}"


def _visible_states(n, rng):
    out = []
    while len(out) < n:
        s = RelativeState(rng.uniform(0.39, 1.25), rng.uniform(-0.5, 0.5), rng.uniform(-FOV.gamma_max, FOV.gamma_max))
        if check_visibility(s, FOV, GEOM) is not None:
            continue
        try:
            p = observe(s, K, GEOM, FOV)
        except NotVisible:
            continue
        out.append((s, p))
    return out


def ac7():
    rng = np.random.default_rng(7)
    worst = 0.0
    for s, p in _visible_states(10_000, rng):
        worst = max(worst, float(np.max(np.abs(estimate_pose(p, K, GEOM).as_array() - s.as_array()))))
    qpos = qang = 0.0
    for x in np.linspace(0.5, 1.25, 16):
        for y in np.linspace(-0.3, 0.3, 7):
            for g in np.linspace(-1.0, 1.0, 11):
                s = RelativeState(x, y, g)
                try:
                    p = observe(s, K, GEOM, FOV, quantize=True)
                except NotVisible:
                    continue
                e = np.abs(estimate_pose(p, K, GEOM).as_array() - s.as_array())
                qpos, qang = max(qpos, e[0], e[1]), max(qang, e[2])
    ok = worst <= 1e-9 and qpos < 0.01 and qang < 0.02
    return ok, f"noiseless worst error {worst:.1e} vs 1e-9; quantized worst {qpos:.4f} m vs 0.01, {qang:.4f} rad vs 0.02"


def _fd_errors(record, h):
    leader, follower = record.leader, record.follower
    u_l, u_f = record.u_l, record.u_f
    s = relative_state(leader, follower)
    eps = np.asarray(record.eps)
    bar = s.as_array() - eps

    def V(dt):
        sgn = 1.0 if dt > 0 else -1.0
        lead = integrate_unicycle(leader, Twist(sgn * u_l.v, sgn * u_l.omega), abs(dt))
        foll = integrate_unicycle(follower, Twist(sgn * u_f.v, sgn * u_f.omega), abs(dt))
        e = relative_state(lead, foll).as_array() - bar
        e[2] = math.remainder(e[2], 2 * math.pi)
        return lyapunov(e)

    want = lyapunov_rate(s, eps, u_l, u_l, u_f)
    return abs((V(h) - V(-h)) / (2 * h) - want)


def ac8():
    n_pass, failures = lyapunov_check(1000, seed=8)
    for f in failures:
        print("lyapunov failure:", f)
    records, _ = run(preset_circular(duration=20.0))
    fd_ok = True
    worst = 0.0
    for r in records[::10]:
        e1, e2 = _fd_errors(r, 1e-3), _fd_errors(r, 5e-4)
        worst = max(worst, e1)
        fd_ok &= e1 <= 1e-6 and e2 <= max(e1 / 3, 1e-11)
    ok = n_pass >= 990 and fd_ok
    return ok, f"{n_pass}/1000 samples satisfy dV/dt <= -phi V (need 990); finite-difference O(h^2) {fd_ok} (worst {worst:.1e} at h=1e-3)"


def ac9():
    same = {}
    presets = {
        "circular": lambda: preset_circular(seed=11),
        "braking": lambda: preset_braking(0.4, seed=11),
        "ushape": lambda: preset_ushape(seed=11),
        "circular-raster": lambda: preset_circular(seed=11, sensing="raster", duration=5.0),
    }
    for name, make in presets.items():
        a = records_csv(run(make())[0]).encode()
        b = records_csv(run(make())[0]).encode()
        same[name] = a == b
    return all(same.values()), "byte-identical CSV per preset: " + ", ".join(f"{k} {v}" for k, v in same.items())


CHECKS = {f"AC{i}": f for i, f in enumerate((ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9), start=1)}


@pytest.mark.parametrize("name", list(CHECKS))
def test_acceptance(name, acceptance):
    passed, detail = CHECKS[name]()
    acceptance(name, passed, detail)
    assert passed, f"{name}: {detail}"


if __name__ == "__main__":
    failed = 0
    for name, check in CHECKS.items():
        passed, detail = check()
        failed += not passed
        print(f"{name} {'PASS' if passed else 'FAIL'}: {detail}", flush=True)
    sys.exit(1 if failed else 0)
