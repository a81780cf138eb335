import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oisac.ekf import EkfNoise, EkfState, NumericalFailure, predict, process, process_jacobian, update
from oisac.geometry import Pose2D, RelativeState, Twist, integrate_unicycle, leader_pose_from_relative, relative_state

NOISE = EkfNoise()


def test_zero_motion_predict():
    # with no velocity uncertainty the Jacobian leaves P alone, so only Q dt is added
    P = np.diag([0.1, 0.1, 0.1, 0.0, 0.0])
    st0 = EkfState(np.array([1.0, 0.1, 0.2, 0.0, 0.0]), P)
    out = predict(st0, Twist(0, 0), 0.1, NOISE)
    assert out.mean == pytest.approx(st0.mean)
    assert out.cov == pytest.approx(P + np.diag(NOISE.Q) * 0.1, abs=1e-15)


def test_predict_covariance_oracle():
    st0 = EkfState.initial(RelativeState(1.0, 0.1, 0.2))
    u = Twist(0.2, 0.05)
    J = process_jacobian(st0.mean, u, 0.1)
    out = predict(st0, u, 0.1, NOISE)
    assert out.cov == pytest.approx(J @ st0.cov @ J.T + np.diag(NOISE.Q) * 0.1, abs=1e-15)


def test_aligned_motion_keeps_distance():
    m = np.array([1.0, 0.0, 0.0, 0.3, 0.0])
    assert process(m, Twist(0.3, 0), 0.1)[:3] == pytest.approx([1, 0, 0])


@given(
    st.floats(0.4, 1.3), st.floats(-0.4, 0.4), st.floats(-1, 1), st.floats(-0.6, 0.6), st.floats(-0.3, 0.3),
    st.floats(-0.6, 0.6), st.floats(-0.3, 0.3),
)
def test_jacobian_finite_difference(x, y, g, v, w, vf, wf):
    m = np.array([x, y, g, v, w])
    u = Twist(vf, wf)
    J = process_jacobian(m, u, 0.05)
    h = 1e-6
    fd = np.empty((5, 5))
    for i in range(5):
        d = np.zeros(5)
        d[i] = h
        fd[:, i] = (process(m + d, u, 0.05) - process(m - d, u, 0.05)) / (2 * h)
    assert J == pytest.approx(fd, abs=1e-6)


def test_update_limits():
    st0 = EkfState(np.array([1.0, 0.1, 0.2, 0.3, 0.0]))
    z = RelativeState(0.9, 0.0, 0.1)
    loose = update(st0, z, EkfNoise(R=(1e12, 1e12, 1e12)))
    assert loose.mean == pytest.approx(st0.mean, abs=1e-9)
    tight = update(st0, z, EkfNoise(R=(1e-14, 1e-14, 1e-14)))
    assert tight.mean[:3] == pytest.approx(z.as_array(), abs=1e-9)


def test_update_keeps_covariance_symmetric_psd():
    st0 = EkfState.initial(RelativeState(1, 0, 0))
    out = update(predict(st0, Twist(0.1, 0.05), 0.1, NOISE), RelativeState(1.01, 0.02, 0.01), NOISE)
    assert np.allclose(out.cov, out.cov.T)
    assert np.all(np.linalg.eigvalsh(out.cov) > 0)


def test_non_pd_innovation_raises():
    bad = EkfState(np.zeros(5), -np.eye(5))
    with pytest.raises(NumericalFailure):
        update(bad, RelativeState(1, 0, 0), NOISE)


def test_velocity_converges_for_constant_leader():
    """Leader at (0.3, 0), follower at (0.25, 0); pose measured at 10 Hz without noise."""
    u_l, u_f = Twist(0.3, 0.0), Twist(0.25, 0.0)
    follower = Pose2D(0, 0, 0)
    leader = leader_pose_from_relative(follower, RelativeState(0.75, 0.05, 0.0))
    est = EkfState.initial(relative_state(leader, follower))
    settled = None
    for k in range(1, 51):
        leader = integrate_unicycle(leader, u_l, 0.1)
        follower = integrate_unicycle(follower, u_f, 0.1)
        est = update(predict(est, u_f, 0.1, NOISE), relative_state(leader, follower), NOISE)
        if abs(est.velocity.v - 0.3) <= 0.02:
            settled = settled or k * 0.1
        else:
            settled = None
    print(f"velocity estimate settled at t={settled}")
    assert settled is not None and settled <= 3.0


def test_noise_validation():
    with pytest.raises(ValueError):
        EkfNoise(Q=(1, 1, 1, 1))
    with pytest.raises(ValueError):
        EkfNoise(R=(1, 0, 1))


def test_velocity_error_vanishes_within_ten_seconds():
    u_l, u_f = Twist(0.2, 0.05), Twist(0.18, 0.05)
    follower = Pose2D(0, 0, 0)
    leader = leader_pose_from_relative(follower, RelativeState(0.8, -0.1, 0.1))
    est = EkfState.initial(relative_state(leader, follower))
    for _ in range(100):
        leader = integrate_unicycle(leader, u_l, 0.1)
        follower = integrate_unicycle(follower, u_f, 0.1)
        est = update(predict(est, u_f, 0.1, NOISE), relative_state(leader, follower), NOISE)
    assert abs(est.velocity.v - u_l.v) < 1e-3
    assert abs(est.velocity.omega - u_l.omega) < 1e-3
