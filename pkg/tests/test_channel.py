import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oisac.channel import (
    DROP_NEWEST,
    DROP_OLDEST,
    TABLE_ANGLE,
    TABLE_DISTANCE,
    ChannelConfig,
    DisplayQueueConfig,
    PlrTable,
    apply_channel_packet,
    apply_channel_raster,
    displayed_payload,
    plr,
    plr_angle,
    plr_distance,
    run_display_queue,
    simulate_display_queue,
)
from oisac.geometry import RelativeState
from oisac.scc import FrameRaster

ZERO = PlrTable(((0, 0.0), (1000, 0.0)), ((0, 0.0), (89, 0.0)))
ONE = PlrTable(((0, 1.0), (1000, 1.0)), ((0, 1.0), (89, 1.0)))


def test_plr_examples():
    assert plr(1.0, 0.0) == pytest.approx(1 - (1 - 0.011) * (1 - 0.007), abs=1e-12)
    assert plr_distance(1.15) == pytest.approx(0.0225)
    assert plr(1.15, 0.0) == pytest.approx(1 - (1 - 0.0225) * (1 - 0.007), abs=1e-12)
    assert plr(0.0, 0.0) == pytest.approx(1 - (1 - 0.005) * (1 - 0.007), abs=1e-12)


def test_table_entries_exact():
    for d, p in TABLE_DISTANCE:
        assert plr_distance(d / 100) == p
    for a, p in TABLE_ANGLE:
        assert plr_angle(math.radians(a)) == p


def test_ramp_above_table():
    assert plr_distance(1.60) == pytest.approx(1.0)
    assert plr_distance(3.0) == 1.0
    assert 0.357 < plr_distance(1.55) < 1.0


def test_plr_preconditions():
    with pytest.raises(ValueError):
        plr(-0.1, 0)
    with pytest.raises(ValueError):
        plr(1.0, math.pi / 2)


@given(st.floats(0, 2), st.floats(0, 2))
def test_plr_monotone_in_distance(a, b):
    lo, hi = sorted((a, b))
    assert plr(lo, 0.2) <= plr(hi, 0.2) + 1e-15


def test_table_validation():
    with pytest.raises(ValueError):
        PlrTable(((0, 0.1), (0, 0.2)), TABLE_ANGLE)
    with pytest.raises(ValueError):
        PlrTable(TABLE_DISTANCE, ((0, 1.5), (10, 0.1)))


def test_packet_channel_trivial_cases():
    rng = np.random.default_rng(0)
    s = RelativeState(0.75, 0, 0)
    assert all(apply_channel_packet("p", s, ChannelConfig(plr=ZERO), rng) == "p" for _ in range(1000))
    assert all(apply_channel_packet("p", s, ChannelConfig(plr=ONE), rng) is None for _ in range(1000))


def test_packet_drop_rate_matches_model():
    rng = np.random.default_rng(42)
    s = RelativeState(0.75, 0, math.pi / 6)
    cfg = ChannelConfig()
    drops = sum(apply_channel_packet(1, s, cfg, rng) is None for _ in range(100_000))
    assert abs(drops / 1e5 - plr(0.75, math.pi / 6)) <= 0.005


def test_raster_identity_and_box_blur():
    px = np.zeros((4, 12))
    px[:, 6:] = 240
    r = FrameRaster(px)
    same = apply_channel_raster(r, 0.0, ChannelConfig(), np.random.default_rng(0))
    assert np.array_equal(same.pixels, r.pixels)
    blurred = apply_channel_raster(r, 3.0, ChannelConfig(blur_gain=1.0), np.random.default_rng(0))
    row = blurred.pixels[0].astype(float)
    assert np.count_nonzero((row > 0) & (row < 240)) == 2
    assert abs(row.mean() - px[0].mean()) <= 1.0


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 3), st.floats(0, 50))
def test_raster_corruption_keeps_shape_and_range(accel, sigma):
    r = FrameRaster(np.random.default_rng(1).integers(0, 256, (20, 30)))
    out = apply_channel_raster(r, accel, ChannelConfig(noise_sigma=sigma), np.random.default_rng(2))
    assert out.pixels.shape == r.pixels.shape
    assert out.pixels.dtype == np.uint8


def test_queue_delay_nq1_bounded_by_one_publish_period():
    # the message on screen waited at most one publish period before rendering began
    d = simulate_display_queue(DisplayQueueConfig(N_q=1), 30.0)
    assert 0.06 <= d <= 0.06 + 0.05


def test_queue_never_fills_below_render_rate():
    for n in (1, 10, 50):
        assert simulate_display_queue(DisplayQueueConfig(f_pub=10, N_q=n), 30.0) == pytest.approx(0.06, rel=1e-9)


@pytest.mark.parametrize("policy", [DROP_OLDEST, DROP_NEWEST])
def test_queue_delay_monotone_in_capacity(policy):
    delays = [simulate_display_queue(DisplayQueueConfig(N_q=n, policy=policy), 60.0) for n in (1, 5, 10, 20, 30, 40, 50)]
    assert all(b >= a for a, b in zip(delays, delays[1:]))


def test_queue_shows_in_publish_order():
    q = run_display_queue(DisplayQueueConfig(N_q=3), [0, 10, 20, 30, 40, 50], list("abcdef"))
    ts = [t for _, t, _ in q.shown]
    assert ts == sorted(ts)
    assert q.evicted > 0


def test_displayed_payload_constant_velocity():
    cfg = DisplayQueueConfig()
    hist = [(k / 20, 0.3) for k in range(100)]
    assert displayed_payload(4.0, hist, cfg) == 0.3


def test_displayed_payload_ramp_lag():
    cfg = DisplayQueueConfig(N_q=1)
    hist = [(k / 20, 0.1 * k / 20) for k in range(200)]
    t = 8.0
    lag = 0.1 * t - displayed_payload(t, hist, cfg)
    assert 0.005 <= lag <= 0.012
