import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from motionforce.dynamics import (
    clamp_torque, coriolis_matrix, dynamics_terms, forward_dynamics, gravity_vector, inverse_dynamics_torque,
    kinetic_energy, mass_matrix, mass_matrix_derivatives, potential_energy, step_terms,
)
from motionforce.kinematics import forward_kinematics, link_jacobian
from motionforce.model import LinkParam, RobotModel, default_robot
from motionforce._fast import free_motion

ROBOT = default_robot()
angles = arrays(np.float64, 6, elements=st.floats(-np.pi, np.pi))
rates = arrays(np.float64, 6, elements=st.floats(-2.0, 2.0))


def single_link_robot(m, l, inertia, gravity=(0.0, 0.0, -9.81)):
    """Only link 1 has mass: COM at distance ``l`` along its x axis."""
    frame = np.eye(4)
    frame[0, 3] = l
    links = [LinkParam(m, np.diag(inertia), frame)]
    links += [LinkParam(0.0, np.zeros((3, 3))) for _ in range(5)]
    return RobotModel(tuple(links), ROBOT.dh_table, gravity)


def test_single_link_inertia():
    m, l, inertia = 2.0, 0.3, (0.01, 0.02, 0.03)
    A = mass_matrix(single_link_robot(m, l, inertia), np.array([0.4, 0.1, 0, 0, 0, 0]))
    # joint 1 axis expressed in frame 1 is its y axis (alpha_1 = pi/2)
    assert A[0, 0] == pytest.approx(m * l * l + inertia[1], abs=1e-12)


@pytest.mark.parametrize("q", [0.0, 0.3, 1.2, -2.5])
def test_single_link_pendulum_gravity(q):
    # gravity along -y turns the vertical first joint into a pendulum
    m, l = 2.0, 0.3
    model = single_link_robot(m, l, (0.01, 0.02, 0.03), gravity=(0.0, -9.81, 0.0))
    g = gravity_vector(model, np.array([q, 0, 0, 0, 0, 0]))
    assert g[0] == pytest.approx(m * 9.81 * l * np.cos(q), abs=1e-12)


@given(angles)
def test_mass_matrix_symmetric_pd(theta):
    A = mass_matrix(ROBOT, theta)
    assert np.max(np.abs(A - A.T)) < 1e-10
    assert np.linalg.eigvalsh(A)[0] > 0


@given(angles, rates)
def test_kinetic_energy_per_link(theta, qd):
    frames = forward_kinematics(ROBOT, theta)
    total = 0.0
    for i, link in enumerate(ROBOT.links):
        jac = link_jacobian(ROBOT, theta, i + 1)
        v, w = jac.linear @ qd, jac.angular @ qd
        R = frames[i].rotation
        total += 0.5 * (link.mass * v @ v + w @ R @ np.array(link.inertia_body) @ R.T @ w)
    assert kinetic_energy(ROBOT, theta, qd) == pytest.approx(total, rel=1e-12, abs=1e-14)


@given(angles)
def test_mass_derivatives_match_finite_differences(theta):
    analytic = mass_matrix_derivatives(ROBOT, theta)
    fd = mass_matrix_derivatives(ROBOT, theta, method="fd")
    np.testing.assert_allclose(analytic, fd, atol=1e-8)


def test_coriolis_zero_at_rest():
    assert np.all(coriolis_matrix(ROBOT, np.linspace(-1, 1, 6), np.zeros(6)) == 0.0)


@given(angles, rates)
def test_skew_symmetry(theta, qd):
    h = 1e-6
    A_dot = (mass_matrix(ROBOT, theta + h * qd) - mass_matrix(ROBOT, theta - h * qd)) / (2 * h)
    B = coriolis_matrix(ROBOT, theta, qd)
    assert abs(qd @ (A_dot - 2 * B) @ qd) < 1e-8 * max(1.0, qd @ qd)


def test_printed_form_breaks_skew_symmetry(rng):
    theta, qd = rng.uniform(-np.pi, np.pi, 6), rng.uniform(-2, 2, 6)
    h = 1e-6
    A_dot = (mass_matrix(ROBOT, theta + h * qd) - mass_matrix(ROBOT, theta - h * qd)) / (2 * h)
    B = coriolis_matrix(ROBOT, theta, qd, method="printed")
    assert abs(qd @ (A_dot - 2 * B) @ qd) > 1e-3


@given(angles, rates)
def test_lagrangian_left_side(theta, qd):
    # A_dot qd - dT/dtheta + dV/dtheta from energies only
    h = 1e-6
    A_dot = (mass_matrix(ROBOT, theta + h * qd) - mass_matrix(ROBOT, theta - h * qd)) / (2 * h)
    dT, dV = np.empty(6), np.empty(6)
    for k, e in enumerate(np.eye(6) * h):
        dT[k] = (kinetic_energy(ROBOT, theta + e, qd) - kinetic_energy(ROBOT, theta - e, qd)) / (2 * h)
        dV[k] = (potential_energy(ROBOT, theta + e) - potential_energy(ROBOT, theta - e)) / (2 * h)
    ours = coriolis_matrix(ROBOT, theta, qd) @ qd + gravity_vector(ROBOT, theta)
    np.testing.assert_allclose(ours, A_dot @ qd - dT + dV, atol=1e-6)


def test_gravity_zero_without_field():
    model = ROBOT.with_gravity((0.0, 0.0, 0.0))
    assert np.all(gravity_vector(model, np.linspace(-1, 1, 6)) == 0.0)


@given(angles)
def test_gravity_is_potential_gradient(theta):
    h = 1e-6
    grad = [(potential_energy(ROBOT, theta + e) - potential_energy(ROBOT, theta - e)) / (2 * h)
            for e in np.eye(6) * h]
    np.testing.assert_allclose(gravity_vector(ROBOT, theta), grad, atol=1e-7)


def test_balanced_torque_gives_zero_acceleration(rng):
    theta, qd = rng.uniform(-np.pi, np.pi, 6), rng.uniform(-1, 1, 6)
    tau_ext = rng.normal(size=6)
    terms = dynamics_terms(ROBOT, theta, qd)
    tau = terms.coriolis @ qd + terms.gravity + tau_ext
    np.testing.assert_allclose(forward_dynamics(ROBOT, theta, qd, tau, tau_ext), 0.0, atol=1e-9)


@given(angles, rates, rates)
def test_inverse_forward_round_trip(theta, qd, qdd):
    tau_ext = np.linspace(-1, 1, 6)
    tau = inverse_dynamics_torque(ROBOT, theta, qd, qdd, tau_ext).tau
    np.testing.assert_allclose(forward_dynamics(ROBOT, theta, qd, tau, tau_ext), qdd, atol=1e-6)
    back = inverse_dynamics_torque(ROBOT, theta, qd, forward_dynamics(ROBOT, theta, qd, tau, tau_ext), tau_ext)
    np.testing.assert_allclose(back.tau, tau, atol=1e-9)


def test_torque_clamp_sets_flags():
    cmd = clamp_torque(np.array([300.0, -260.0, 10.0, 0.0, 250.0, -1e4]), 250.0)
    np.testing.assert_array_equal(cmd.tau, [250.0, -250.0, 10.0, 0.0, 250.0, -250.0])
    np.testing.assert_array_equal(cmd.saturated, [True, True, False, False, False, True])


def test_static_hold_is_gravity(rng):
    theta = rng.uniform(-np.pi, np.pi, 6)
    tau = inverse_dynamics_torque(ROBOT, theta, np.zeros(6), np.zeros(6)).tau
    np.testing.assert_allclose(tau, gravity_vector(ROBOT, theta), atol=1e-12)


def test_kinetic_energy_zero_at_rest():
    assert kinetic_energy(ROBOT, np.ones(6), np.zeros(6)) == 0.0


def test_energy_conserved_without_gravity(rng):
    model = ROBOT.with_gravity((0.0, 0.0, 0.0))
    _, _, energy = free_motion(model, rng.uniform(-np.pi, np.pi, 6), rng.uniform(-1, 1, 6), 1e-4, 100_000)
    assert np.max(np.abs(energy / energy[0] - 1)) < 1e-5


def test_passive_swing_conserves_total_energy(rng):
    theta0, qd0 = rng.uniform(-1, 1, 6), np.zeros(6)
    theta, qd, _ = free_motion(ROBOT, theta0, qd0, 1e-4, 5000)
    before = kinetic_energy(ROBOT, theta0, qd0) + potential_energy(ROBOT, theta0)
    after = kinetic_energy(ROBOT, theta, qd) + potential_energy(ROBOT, theta)
    assert after == pytest.approx(before, rel=1e-8, abs=1e-8)


@given(angles, rates)
def test_step_terms_consistent(theta, qd):
    terms = step_terms(ROBOT, theta, qd)
    ref = dynamics_terms(ROBOT, theta, qd)
    np.testing.assert_allclose(terms.mass, ref.mass, atol=1e-12)
    np.testing.assert_allclose(terms.coriolis_force, ref.coriolis @ qd, atol=1e-12)
    np.testing.assert_allclose(terms.gravity, ref.gravity, atol=1e-12)
