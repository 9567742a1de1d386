import numpy as np
import pytest

from motionforce.dynamics import kinetic_energy
from motionforce.model import ControllerConfig
from motionforce.sim import (
    JointState, SimulationDiverged, compute_metrics, contact_episodes, rk4_step, run, step,
)


@pytest.fixture(scope="module")
def short_sim1(sim1):
    return sim1.replace(duration=0.5)


@pytest.fixture(scope="module")
def short_run(short_sim1):
    return run(short_sim1)


def test_record_count_and_grid(short_run, short_sim1):
    log, _ = short_run
    assert len(log) == int(np.floor(short_sim1.duration / short_sim1.dt)) + 1
    np.testing.assert_allclose(np.diff(log.t), short_sim1.dt, rtol=1e-9)
    assert log.t[0] == 0.0
    assert log.meta["dt"] == short_sim1.dt and len(log.meta["scenario_hash"]) == 64


def test_run_is_deterministic(short_run, short_sim1):
    log, _ = short_run
    again, _ = run(short_sim1)
    for name, col in log.columns.items():
        assert np.array_equal(col, again.columns[name]), name


def test_metrics_non_negative(short_run):
    _, m = short_run
    assert np.all(m.max_abs_force >= 0) and np.all(m.force_bound_violation_ratio >= 0)
    assert m.free_space_rms_error >= 0 and m.contact_duration >= 0 and 0 <= m.saturation_fraction <= 1


def test_obstacle_free_has_no_force(sim1):
    log, m = run(sim1.replace(obstacles=(), duration=1.0))
    assert m.contact_duration == 0 and not log.in_contact.any()
    assert np.all(log.f == 0)


def _free_scenario(sim1):
    robot = sim1.robot.with_gravity((0.0, 0.0, 0.0))
    return sim1.replace(robot=robot, obstacles=())


def test_torque_free_energy_per_step(sim1):
    scenario = _free_scenario(sim1)
    theta, qd = np.array([0.3, -0.8, 1.1, -0.4, 0.6, 0.2]), np.array([0.5, -0.4, 0.3, 0.8, -0.6, 0.7])
    worst = 0.0
    for _ in range(200):
        e0 = kinetic_energy(scenario.robot, theta, qd)
        theta, qd = rk4_step(scenario, theta, qd, np.zeros(6), scenario.dt)
        worst = max(worst, abs(kinetic_energy(scenario.robot, theta, qd) / e0 - 1))
    assert worst < 1e-10


def test_torque_override_is_applied(sim1):
    scenario = _free_scenario(sim1).replace(duration=0.05)
    log, _ = run(scenario, torque_fn=lambda t, th, qd, terms: np.zeros(6))
    assert np.all(log.tau == 0)
    assert np.all(log.theta_dot[0] == 0)
    # no gravity, no torque, starting at rest: nothing moves
    assert np.all(log.theta_dot == 0)


def test_static_hold_step(sim1):
    theta = np.array(sim1.initial_joints)
    state = JointState(theta, np.zeros(6), 0.0)
    nxt, record = step(sim1.replace(obstacles=()), state, torque_fn=lambda t, th, qd, terms: terms.gravity)
    assert np.max(np.abs(nxt.theta_dot)) < 1e-12
    assert nxt.t == sim1.dt and record.t == 0.0


def test_episodes_bridge_short_gaps():
    mask = np.zeros(1000, dtype=bool)
    mask[100:200] = True
    mask[230:300] = True  # 30 ms gap
    mask[500:600] = True  # 200 ms gap
    assert contact_episodes(mask, 1e-3) == [(100, 300), (500, 600)]
    assert contact_episodes(np.zeros(10, dtype=bool), 1e-3) == []


def test_force_ratio_skips_contact_transient(short_run, short_sim1):
    log, _ = short_run
    log.columns["in_contact"][:] = False
    log.columns["in_contact"][100:400] = True
    log.columns["f"][:] = 0.0
    log.columns["f"][150] = [400.0, 0.0, 0.0]  # inside the first 0.2 s of the episode
    log.columns["f"][350] = [20.0, -25.0, 66.0]
    m = compute_metrics(log, (40, 50, 60), short_sim1.dt)
    np.testing.assert_allclose(m.force_bound_violation_ratio, [0.5, 0.5, 1.1])
    assert m.contact_duration == pytest.approx(0.3)


def test_divergence_carries_partial_log(sim1):
    scenario = sim1.replace(obstacles=(), duration=0.2)
    with pytest.raises(SimulationDiverged) as info:
        run(scenario, torque_fn=lambda t, th, qd, terms: np.full(6, 1e7))
    exc = info.value
    assert 0 < len(exc.records) <= 10
    assert exc.log is not None and len(exc.log) >= len(exc.records)
    assert exc.records[-1].t == exc.log.t[-1]


def test_default_controller_law():
    assert ControllerConfig().law == "sampled"
