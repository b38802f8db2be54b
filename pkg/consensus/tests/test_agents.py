import numpy as np
import pytest

from consensus.agents import (
    Pose,
    UnicycleParams,
    apply_gains,
    check_noise_trace_bound,
    custom_affine_dynamics,
    friction_disturbance_gain,
    pose_kinematics,
    solve_gains,
    stacked_input_gain,
    stacked_terms,
    stochastic_noise_gain,
    unicycle_dynamics,
    unicycle_reduced_dynamics,
    wrap_angle,
)
from consensus.exceptions import DimensionMismatch, ScenarioValidationError, SingularInputGain

from . import oracles

PARAMS = UnicycleParams(m=10.0, R_axle=0.5, r_wheel=0.05, p_offset=0.04)


def test_reduced_dynamics_at_heading_zero():
    drift, gain = unicycle_reduced_dynamics(PARAMS, Pose(0.0, 0.0, 0.0), [0.0, 0.0])
    assert np.allclose(drift, 0.0)
    m, p, R, r = PARAMS.m, PARAMS.p_offset, PARAMS.R_axle, PARAMS.r_wheel
    expected = np.diag([1.0 / m, 1.0 / (1.0 - m * p ** 2)]) @ np.array([[1.0, 1.0], [R, -R]]) / r
    assert np.allclose(gain, expected)


def test_input_gain_invertible_for_all_headings():
    for theta in np.linspace(-np.pi, np.pi, 13):
        _, gain = unicycle_reduced_dynamics(PARAMS, [0.0, 0.0, theta], [0.3, -0.2])
        assert np.linalg.cond(gain) < 1e8


def test_drift_vanishes_without_rotation():
    drift, _ = unicycle_reduced_dynamics(PARAMS, [1.0, 2.0, 0.7], [0.5, 0.0])
    assert np.allclose(drift, 0.0)


def test_reduced_dynamics_match_scalar_model():
    rng = np.random.default_rng(7)
    m, R, r, p = PARAMS.m, PARAMS.R_axle, PARAMS.r_wheel, PARAMS.p_offset
    for _ in range(100):
        theta = float(rng.uniform(-np.pi, np.pi))
        v = float(rng.normal())
        omega = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 3.0))
        drift, gain = unicycle_reduced_dynamics(PARAMS, [0.0, 0.0, theta], [v, omega])
        expected_drift, expected_gain = oracles.unicycle_terms(m, R, r, p, theta, v, omega)
        assert np.allclose(drift, expected_drift, atol=1e-10)
        assert np.allclose(gain, expected_gain, rtol=1e-10, atol=1e-10)


def test_pose_kinematics():
    assert np.allclose(pose_kinematics([0.0, 0.0, 0.0], [1.0, 0.0], 0.04), [1.0, 0.0, 0.0])
    assert np.allclose(pose_kinematics([0.0, 0.0, 0.0], [0.0, 1.0], 0.04), [0.0, 0.04, 1.0])
    assert np.allclose(pose_kinematics([0.0, 0.0, np.pi / 2], [0.0, 1.0], 0.04), [-0.04, 0.0, 1.0])


def test_unicycle_dynamics_carries_pose():
    dynamics = unicycle_dynamics(PARAMS)
    assert dynamics.n == 2 and dynamics.aux_dim == 3
    assert np.allclose(dynamics.aux_rate(np.zeros(3), np.array([1.0, 0.0])), [1.0, 0.0, 0.0])


@pytest.mark.parametrize("theta, wrapped", [(3 * np.pi, np.pi), (-np.pi, np.pi), (0.5, 0.5), (-7.0, -7.0 + 2 * np.pi)])
def test_wrap_angle(theta, wrapped):
    assert wrap_angle(theta) == pytest.approx(wrapped)
    assert Pose(0.0, 0.0, theta).wrapped_theta == pytest.approx(wrapped)


def test_invalid_unicycle_parameters():
    with pytest.raises(ScenarioValidationError):
        UnicycleParams(m=-1.0)


def test_custom_affine_singular_input():
    with pytest.raises(SingularInputGain):
        custom_affine_dynamics(np.eye(2), [[1.0, 2.0], [2.0, 4.0]])


def test_custom_affine_shapes():
    with pytest.raises(DimensionMismatch):
        custom_affine_dynamics(np.eye(2), np.eye(3))


def test_stacked_gains_round_trip():
    dynamics = custom_affine_dynamics([[0.0, 1.0], [-1.0, 0.0]], [[2.0, 0.0], [1.0, 1.0]])
    X = np.arange(6.0)
    F, phis = stacked_terms(dynamics, X)
    assert np.allclose(F[:2], [1.0, 0.0])
    U = np.linspace(-1.0, 1.0, 6)
    assert np.allclose(solve_gains(phis, apply_gains(phis, U)), U)
    assert np.allclose(stacked_input_gain(dynamics, X) @ U, apply_gains(phis, U))


def test_stacked_state_length():
    dynamics = custom_affine_dynamics(np.eye(2), np.eye(2))
    with pytest.raises(DimensionMismatch):
        stacked_terms(dynamics, np.ones(5))


def test_friction_gain_is_bounded():
    X = np.array([-3.0, -0.1, 0.0, 0.5, 10.0])
    G = friction_disturbance_gain(X)
    assert np.all(np.diag(G) >= 0.0) and np.all(np.diag(G) < 1.0)
    assert G[2, 2] == 0.0


def test_noise_gain_structure_and_trace_bound():
    rng = np.random.default_rng(3)
    H = stochastic_noise_gain(np.array([0.5, -0.2, 0.1, 0.3]), alpha=1.2, n=2)
    assert H.shape == (4, 2)
    assert H[2, 0] == 0.0 and H[0, 1] == 0.0
    assert np.sign(H[1, 0]) == -1.0

    # the bound holds on a ball of radius about 0.7 in eight dimensions
    samples = [0.6 * rng.random() * v / np.linalg.norm(v) for v in rng.uniform(-1.0, 1.0, size=(50, 8))]
    report = check_noise_trace_bound(lambda X: stochastic_noise_gain(X, 1.2), samples, 1.2)
    assert report.samples == 50
    assert report.fraction == 1.0
