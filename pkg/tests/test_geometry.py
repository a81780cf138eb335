import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oisac.geometry import (
    Bounds,
    Pose2D,
    RelativeState,
    Twist,
    integrate_unicycle,
    leader_pose_from_relative,
    relative_derivative,
    relative_state,
    wrap,
)

angles = st.floats(-10.0, 10.0, allow_nan=False)
coords = st.floats(-5.0, 5.0, allow_nan=False)


def euler(pose: Pose2D, u: Twist, dt: float, h: float = 1e-6) -> Pose2D:
    """Fine forward-Euler reference integrator."""
    n = int(round(dt / h))
    x, y, th = pose.x, pose.y, pose.theta
    for _ in range(n):
        x += h * u.v * math.cos(th)
        y += h * u.v * math.sin(th)
        th += h * u.omega
    return Pose2D(x, y, wrap(th))


def test_straight_line():
    p = integrate_unicycle(Pose2D(0, 0, 0), Twist(1, 0), 1.0)
    assert (p.x, p.y, p.theta) == pytest.approx((1, 0, 0))


def test_pure_rotation():
    p = integrate_unicycle(Pose2D(0, 0, 0), Twist(0, 1), math.pi)
    assert (p.x, p.y) == pytest.approx((0, 0))
    assert abs(p.theta) == pytest.approx(math.pi)


def test_quarter_arc_closed_form():
    p = integrate_unicycle(Pose2D(0, 0, 0), Twist(1, math.pi / 2), 1.0)
    assert (p.x, p.y, p.theta) == pytest.approx((2 / math.pi, 2 / math.pi, math.pi / 2), abs=1e-12)


def test_arc_matches_fine_euler():
    start, u = Pose2D(0.3, -0.2, 0.4), Twist(0.5, 0.7)
    exact = integrate_unicycle(start, u, 0.5)
    ref = euler(start, u, 0.5)
    assert (exact.x, exact.y, exact.theta) == pytest.approx((ref.x, ref.y, ref.theta), abs=1e-5)


def test_tiny_omega_is_continuous():
    a = integrate_unicycle(Pose2D(0, 0, 0.3), Twist(0.4, 1e-12), 2.0)
    b = integrate_unicycle(Pose2D(0, 0, 0.3), Twist(0.4, 0.0), 2.0)
    assert (a.x, a.y) == pytest.approx((b.x, b.y), abs=1e-10)


@given(angles)
def test_wrap_range(a):
    w = wrap(a)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


def test_relative_state_examples():
    assert relative_state(Pose2D(1, 2, 0.3), Pose2D(1, 2, 0.3)).as_array() == pytest.approx([0, 0, 0])
    assert relative_state(Pose2D(1, 0, 0), Pose2D(0, 0, 0)).as_array() == pytest.approx([1, 0, 0])
    s = relative_state(Pose2D(1, 1, math.pi / 2), Pose2D(0, 0, math.pi / 2))
    assert s.as_array() == pytest.approx([1, -1, 0], abs=1e-12)


@given(coords, coords, angles, coords, coords, angles)
def test_relative_state_roundtrip(lx, ly, lt, fx, fy, ft):
    leader, follower = Pose2D(lx, ly, wrap(lt)), Pose2D(fx, fy, wrap(ft))
    back = leader_pose_from_relative(follower, relative_state(leader, follower))
    assert (back.x, back.y) == pytest.approx((leader.x, leader.y), abs=1e-9)
    assert math.isclose(math.cos(back.theta - leader.theta), 1.0, abs_tol=1e-9)


def test_relative_derivative_examples():
    assert relative_derivative(RelativeState(1, 0, 0), Twist(0, 0), Twist(0, 0)) == pytest.approx([0, 0, 0])
    assert relative_derivative(RelativeState(1, 0, 0), Twist(1, 0), Twist(1, 0)) == pytest.approx([0, 0, 0])


def test_relative_derivative_finite_difference():
    s = RelativeState(1, 0.5, 0.2)
    u_l, u_f = Twist(0.3, 0.1), Twist(0.2, 0.05)
    follower = Pose2D(0.1, -0.4, 0.7)
    leader = leader_pose_from_relative(follower, s)
    h = 1e-5

    def rel(dt):
        # a negative step is a positive step under the reversed twist
        sgn = 1.0 if dt > 0 else -1.0
        lead = integrate_unicycle(leader, Twist(sgn * u_l.v, sgn * u_l.omega), abs(dt))
        foll = integrate_unicycle(follower, Twist(sgn * u_f.v, sgn * u_f.omega), abs(dt))
        return relative_state(lead, foll).as_array()

    fd = (rel(h) - rel(-h)) / (2 * h)
    assert relative_derivative(s, u_l, u_f) == pytest.approx(fd, abs=1e-8)


@settings(max_examples=50)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_bounds_clip_admits(v, w):
    b = Bounds(0.6, 0.2, 0.5, 0.2)
    assert b.admits(b.clip(Twist(v, w)))


def test_bounds_validation():
    with pytest.raises(ValueError):
        Bounds(0.6, 0.0, 0.5, 0.2)


def test_integrate_is_vectorizable_over_steps():
    # splitting a constant-twist interval does not change the result
    u = Twist(0.25, -0.3)
    p = Pose2D(0, 0, 0)
    for _ in range(10):
        p = integrate_unicycle(p, u, 0.1)
    q = integrate_unicycle(Pose2D(0, 0, 0), u, 1.0)
    assert np.allclose([p.x, p.y, p.theta], [q.x, q.y, q.theta], atol=1e-12)
