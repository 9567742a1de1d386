import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given
from hypothesis import strategies as st

from motionforce.contact import FREE, ContactState, contact_force
from motionforce.controller import (
    Case, InconsistentStateError, control_step, desired_acceleration, error_bound, joint_acceleration_command,
    rotation_error, tracking_errors,
)
from motionforce.dynamics import gravity_vector
from motionforce.kinematics import end_effector_jacobian, end_effector_pose, jacobian_rate
from motionforce.model import ControllerConfig, Obstacle, default_robot, reference_at

ROBOT = default_robot()
CONFIG = ControllerConfig()
SPHERE = Obstacle((0.35, 0.2, 0.125), 0.125, (250e3,) * 3, (100.0,) * 3)
ZERO = np.zeros(3)


def test_perfect_tracking():
    x = np.array([0.4, 0.1, 0.3])
    err = tracking_errors(x, ZERO, x, ZERO, CONFIG, ZERO)
    for v in (err.e, err.e_dot, err.e_bar, err.e_bar_bounded, err.e_sys):
        assert np.all(v == 0)
    assert np.all(err.active_case == Case.INTERIOR)


def test_upper_saturation_example():
    err = tracking_errors(ZERO, [3.0, 0.0, 0.0], ZERO, ZERO, CONFIG, ZERO)
    assert err.e_bar[0] == 3.0
    assert err.e_bar_bounded[0] == pytest.approx(2.0)
    assert err.active_case[0] == Case.UPPER


@given(st.floats(-3.0, 3.0), st.integers(0, 2))
def test_clamp_matches_branches(scale, axis):
    bound = error_bound(CONFIG)[axis]
    e_dot = np.zeros(3)
    e_dot[axis] = scale * bound
    err = tracking_errors(ZERO, e_dot, ZERO, ZERO, CONFIG, ZERO)
    v = err.e_bar[axis]
    expected = bound if v > bound else (-bound if v < -bound else v)
    assert err.e_bar_bounded[axis] == expected
    assert abs(err.e_bar_bounded[axis]) <= bound


def test_system_error_adds_scaled_force():
    f = np.array([10.0, -20.0, 30.0])
    err = tracking_errors([1e-3, 0, 0], ZERO, ZERO, ZERO, CONFIG, f)
    np.testing.assert_allclose(err.e_sys, err.e_bar_bounded + 0.05 * f)


def test_free_perfect_tracking_follows_reference():
    err = tracking_errors(ZERO, ZERO, ZERO, ZERO, CONFIG, ZERO)
    a, flags = desired_acceleration(err, [1.0, -2.0, 3.0], FREE, CONFIG, ZERO, dt=1e-3)
    np.testing.assert_allclose(a, [1.0, -2.0, 3.0])
    assert not flags.any()


@pytest.mark.parametrize("law", ["continuous", "lagged"])
def test_interior_free_space(law):
    config = replace(CONFIG, law=law, accel_sat=1e9)
    e, e_dot, xdd_ref = np.array([1e-3, -2e-3, 5e-4]), np.array([0.01, 0.02, -0.03]), np.array([0.1, 0.2, 0.3])
    err = tracking_errors(e, e_dot, ZERO, ZERO, config, ZERO)
    a, _ = desired_acceleration(err, xdd_ref, FREE, config, e_dot)
    # two-step evaluation: e_sys first, then the law
    e_sys = e_dot + 150 * e
    np.testing.assert_allclose(a, -350 * e_sys + xdd_ref - 150 * e_dot, rtol=1e-12)


def test_upper_case_paper_constants():
    config = replace(CONFIG, law="continuous", accel_sat=1e9)
    x, x_dot = np.array([0.35, 0.2, 1e-4]), np.array([3.0, 0.01, -0.02])
    contact = contact_force(SPHERE, x, x_dot)
    err = tracking_errors(x, x_dot, x - [0, 0, 1e-4], ZERO, config, contact.force)
    assert err.active_case[0] == Case.UPPER
    a, _ = desired_acceleration(err, ZERO, contact, config, x_dot)
    assert a[0] == pytest.approx((-350 * err.e_sys[0] - 12500 * x_dot[0]) / 5, rel=1e-12)


def test_sampled_law_tends_to_continuous():
    x, x_dot = np.array([0.35, 0.2, 1e-4]), np.array([0.3, 0.01, -0.02])
    contact = contact_force(SPHERE, x, x_dot)
    err = tracking_errors(x, x_dot, x + [1e-4, 2e-4, -1e-4], ZERO, CONFIG, contact.force)
    config = replace(CONFIG, accel_sat=1e12)
    exact, _ = desired_acceleration(err, [0.1, 0.2, 0.3], contact, replace(config, law="continuous"), x_dot)
    gaps = [np.max(np.abs(desired_acceleration(err, [0.1, 0.2, 0.3], contact, config, x_dot, dt=dt)[0] - exact))
            for dt in (1e-5, 1e-6, 1e-7)]
    assert gaps[2] < gaps[1] < gaps[0]
    assert gaps[2] < 1e-3 * np.max(np.abs(exact))


def test_sampled_law_exact_on_double_integrator():
    # one held step of x_ddot = a reproduces exp(-K dt) decay of e_sys in free space
    dt = 1e-3
    e, e_dot = np.array([1e-4, -2e-4, 3e-5]), np.array([1e-3, 0.0, -1e-3])
    err = tracking_errors(e, e_dot, ZERO, ZERO, CONFIG, ZERO)
    a, _ = desired_acceleration(err, ZERO, FREE, CONFIG, e_dot, dt=dt)
    e1, v1 = e + e_dot * dt + 0.5 * a * dt * dt, e_dot + a * dt
    np.testing.assert_allclose(v1 + 150 * e1, err.e_sys * np.exp(-350 * dt), rtol=1e-10, atol=1e-15)


def test_saturation_without_contact():
    err = tracking_errors(ZERO, [3.0, 0.0, 0.0], ZERO, ZERO, CONFIG, ZERO)
    with pytest.raises(InconsistentStateError):
        desired_acceleration(err, ZERO, FREE, replace(CONFIG, saturated_fallback=False), ZERO)
    a, flags = desired_acceleration(err, ZERO, FREE, CONFIG, [3.0, 0.0, 0.0])
    assert a[0] == -50.0 and flags[0]


def test_acceleration_clamp():
    err = tracking_errors([0.01, 0, 0], ZERO, ZERO, ZERO, CONFIG, ZERO)
    a, flags = desired_acceleration(err, ZERO, FREE, CONFIG, ZERO, dt=1e-3)
    assert np.all(np.abs(a) <= 50.0)
    assert flags[0] and not flags[1]


def test_joint_command_trivial():
    qdd, singular = joint_acceleration_command(np.eye(6), np.zeros((6, 6)), np.zeros(6), ZERO, ZERO)
    assert np.all(qdd == 0) and not singular


def test_joint_command_residual(rng):
    theta, qd = np.array([0.3, -0.8, 1.1, -0.4, 0.6, 0.2]), rng.normal(size=6)
    J, Jr = end_effector_jacobian(ROBOT, theta), jacobian_rate(ROBOT, theta, qd)
    xdd, alpha = rng.normal(size=3), rng.normal(size=3)
    qdd, singular = joint_acceleration_command(J, Jr, qd, xdd, alpha)
    assert not singular
    np.testing.assert_allclose(J @ qdd + Jr @ qd, np.concatenate([xdd, alpha]), atol=1e-9)


def test_joint_command_damped_bound(rng):
    J = rng.normal(size=(6, 6))
    J[:, 5] = J[:, 4]  # rank deficient
    Jr, qd = rng.normal(size=(6, 6)), rng.normal(size=6)
    xdd, alpha = rng.normal(size=3), rng.normal(size=3)
    qdd, singular = joint_acceleration_command(J, Jr, qd, xdd, alpha)
    assert singular and np.all(np.isfinite(qdd))
    assert np.linalg.norm(qdd) <= np.linalg.norm(np.concatenate([xdd, alpha]) - Jr @ qd) / 1e-3


def test_rotation_error_small_angle():
    a = 1e-3
    R = np.array([[np.cos(a), -np.sin(a), 0], [np.sin(a), np.cos(a), 0], [0, 0, 1]])
    np.testing.assert_allclose(rotation_error(R, np.eye(3)), [0, 0, a], atol=1e-12)
    assert np.all(rotation_error(np.eye(3), np.eye(3)) == 0)


def _at_rest_on_reference(theta):
    x = end_effector_pose(ROBOT, theta).position
    return x, (x, ZERO, ZERO)


def test_free_hold_is_gravity_compensation():
    theta = np.array([0.3, -0.8, 1.1, -0.4, 0.6, 0.2])
    _, refs = _at_rest_on_reference(theta)
    out = control_step(ROBOT, theta, np.zeros(6), refs, (), CONFIG, dt=1e-3)
    np.testing.assert_allclose(out.command.tau, gravity_vector(ROBOT, theta), atol=1e-9)


def test_sim1_first_command_is_bounded(sim1):
    theta = np.array(sim1.initial_joints)
    refs = reference_at(sim1.trajectory, 0.0)
    out = control_step(sim1.robot, theta, np.zeros(6), refs, sim1.obstacles, sim1.controller, dt=sim1.dt)
    assert np.all(np.isfinite(out.command.tau))
    assert np.all(np.abs(out.command.tau) <= 250.0)


def test_control_step_deterministic(sim1):
    theta, qd = np.array(sim1.initial_joints), np.linspace(-0.2, 0.2, 6)
    refs = reference_at(sim1.trajectory, 1.3)
    a = control_step(sim1.robot, theta, qd, refs, sim1.obstacles, sim1.controller, dt=sim1.dt)
    b = control_step(sim1.robot, theta, qd, refs, sim1.obstacles, sim1.controller, dt=sim1.dt)
    for name in ("x_ddot_des", "theta_ddot_des", "tau"):
        assert np.array_equal(getattr(a.command, name), getattr(b.command, name))


def test_sliding_mode_leaves_logged_contact_alone():
    # a contact point reached at a pose inside the sphere
    theta = np.array([0.3, -0.8, 1.1, -0.4, 0.6, 0.2])
    x = end_effector_pose(ROBOT, theta).position
    sphere = Obstacle(x + [0, 0, 0.1 - 1e-3], 0.1, (250e3,) * 3, (100.0,) * 3)
    qd = np.full(6, 0.1)
    out = control_step(ROBOT, theta, qd, (x, ZERO, ZERO), (sphere,), CONFIG, dt=1e-3)
    assert out.contact.in_contact
    assert np.all(out.contact.surface_velocity == 0)
    static = control_step(ROBOT, theta, qd, (x, ZERO, ZERO), (sphere,), replace(CONFIG, surface_motion="static"),
                          dt=1e-3)
    assert not np.array_equal(out.command.x_ddot_des, static.command.x_ddot_des)
