"""Built-in oracle suite.

Each check compares a library quantity against an independent evaluation
(finite differences, energy bookkeeping, a literal re-implementation) and
reports observed vs expected. ``Faults`` injects known-wrong variants so the
suite can show that its checks detect them.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from ._fast import free_motion
from .controller import Case, tracking_errors
from .dynamics import (
    coriolis_matrix, gravity_vector, kinetic_energy, mass_matrix, potential_energy,
)
from .kinematics import (
    end_effector_jacobian, end_effector_pose, forward_kinematics, jacobian_rate, link_jacobian,
)
from .model import ControllerConfig, RobotModel, Scenario, default_robot
from .sim import rk4_step
from .harness import hold_trajectory


@dataclass(frozen=True)
class Faults:
    """Deliberate defects for negative controls."""

    printed_coriolis: bool = False
    flipped_gravity: bool = False

    def coriolis(self, model, theta, theta_dot):
        method = "printed" if self.printed_coriolis else "analytic"
        return coriolis_matrix(model, theta, theta_dot, method=method)

    def gravity(self, model, theta):
        g = gravity_vector(model, theta)
        return -g if self.flipped_gravity else g


class CheckResult(NamedTuple):
    name: str
    passed: bool
    observed: float
    expected: str
    seconds: float


def _rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


def _random_state(rng, n):
    return rng.uniform(-np.pi, np.pi, (n, 6)), rng.uniform(-2.0, 2.0, (n, 6))


def _mass_from_links(model: RobotModel, theta) -> np.ndarray:
    """Per-link sum built from link Jacobians, without symmetrisation."""
    A = np.zeros((6, 6))
    frames = forward_kinematics(model, theta)
    for i in range(6):
        jac = link_jacobian(model, theta, i + 1)
        R = frames[i].rotation
        inertia = R @ np.array(model.links[i].inertia_body) @ R.T
        A += model.links[i].mass * jac.linear.T @ jac.linear + jac.angular.T @ inertia @ jac.angular
    return A


def check_mass_matrix(model: RobotModel, faults: Faults, n: int = 1000):
    """Symmetry and positive-definiteness at random configurations.

    The raw link sum is tested for symmetry and the library matrix must
    match it, so symmetrising inside the library cannot hide an error.
    """
    worst_asym, worst_diff, min_eig = 0.0, 0.0, np.inf
    for theta in _rng(1).uniform(-np.pi, np.pi, (n, 6)):
        raw = _mass_from_links(model, theta)
        A = mass_matrix(model, theta)
        worst_asym = max(worst_asym, float(np.max(np.abs(raw - raw.T))))
        worst_diff = max(worst_diff, float(np.max(np.abs(A - raw))))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(A)[0]))
    observed = max(worst_asym, worst_diff)
    ok = observed < 1e-10 and min_eig > 0
    return ok, observed, f"|A - A^T| < 1e-10 and min eig > 0 (min eig {min_eig:.3g})"


def check_skew_symmetry(model: RobotModel, faults: Faults, n: int = 100, h: float = 1e-6):
    """``qd^T (A_dot - 2B) qd`` vanishes; ``A_dot`` by central differences."""
    worst = 0.0
    thetas, qds = _random_state(_rng(2), n)
    for theta, qd in zip(thetas, qds):
        A_dot = (mass_matrix(model, theta + h * qd) - mass_matrix(model, theta - h * qd)) / (2 * h)
        B = faults.coriolis(model, theta, qd)
        worst = max(worst, abs(float(qd @ (A_dot - 2 * B) @ qd)) / float(qd @ qd))
    return worst < 1e-8, worst, "< 1e-8 (relative to |qd|^2)"


def _lagrangian_terms_fd(model, theta, qd, h=1e-6):
    """``A_dot qd - dT/dtheta + dV/dtheta`` from energies alone."""
    A_dot = (mass_matrix(model, theta + h * qd) - mass_matrix(model, theta - h * qd)) / (2 * h)
    dT, dV = np.empty(6), np.empty(6)
    for k in range(6):
        step = np.zeros(6)
        step[k] = h
        dT[k] = (kinetic_energy(model, theta + step, qd) - kinetic_energy(model, theta - step, qd)) / (2 * h)
        dV[k] = (potential_energy(model, theta + step) - potential_energy(model, theta - step)) / (2 * h)
    return A_dot @ qd - dT + dV


def check_lagrangian(model: RobotModel, faults: Faults, n: int = 100):
    """``B qd + g`` against the Euler-Lagrange left side minus ``A qdd``."""
    worst = 0.0
    thetas, qds = _random_state(_rng(3), n)
    for theta, qd in zip(thetas, qds):
        ours = faults.coriolis(model, theta, qd) @ qd + faults.gravity(model, theta)
        worst = max(worst, float(np.max(np.abs(ours - _lagrangian_terms_fd(model, theta, qd)))))
    return worst < 1e-6, worst, "< 1e-6 N m"


def check_gravity(model: RobotModel, faults: Faults, n: int = 100, h: float = 1e-6):
    """``g`` equals the gradient of potential energy."""
    worst = 0.0
    for theta in _rng(4).uniform(-np.pi, np.pi, (n, 6)):
        grad = np.array([
            (potential_energy(model, theta + h * e) - potential_energy(model, theta - h * e)) / (2 * h)
            for e in np.eye(6)
        ])
        worst = max(worst, float(np.max(np.abs(faults.gravity(model, theta) - grad))))
    return worst < 1e-6, worst, "< 1e-6 N m"


def check_energy(model: RobotModel, faults: Faults, duration: float = 10.0, dt: float = 1e-4):
    """Torque-free motion without gravity conserves kinetic energy."""
    rng = _rng(5)
    free = model.with_gravity((0.0, 0.0, 0.0))
    _, _, energy = free_motion(free, rng.uniform(-np.pi, np.pi, 6), rng.uniform(-1, 1, 6), dt,
                               int(round(duration / dt)))
    drift = float(np.max(np.abs(energy / energy[0] - 1.0)))
    return drift < 1e-5, drift, "< 1e-5 relative over 10 s"


def check_velocity_jacobian(model: RobotModel, faults: Faults, n: int = 100, h: float = 1e-6):
    """``J7 qd`` against differentiated forward kinematics (position and rotation)."""
    worst = 0.0
    thetas, qds = _random_state(_rng(6), n)
    for theta, qd in zip(thetas, qds):
        plus, minus = end_effector_pose(model, theta + h * qd), end_effector_pose(model, theta - h * qd)
        v_fd = (plus.position - minus.position) / (2 * h)
        R = end_effector_pose(model, theta).rotation
        W = (plus.rotation - minus.rotation) / (2 * h) @ R.T
        w_fd = 0.5 * np.array([W[2, 1] - W[1, 2], W[0, 2] - W[2, 0], W[1, 0] - W[0, 1]])
        twist = end_effector_jacobian(model, theta) @ qd
        worst = max(worst, float(np.max(np.abs(twist - np.concatenate([v_fd, w_fd])))))
    return worst < 1e-5, worst, "< 1e-5"


def check_jacobian_rate(model: RobotModel, faults: Faults, n: int = 100, h: float = 1e-6):
    worst = 0.0
    thetas, qds = _random_state(_rng(7), n)
    for theta, qd in zip(thetas, qds):
        fd = (end_effector_jacobian(model, theta + h * qd) - end_effector_jacobian(model, theta - h * qd)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(jacobian_rate(model, theta, qd) - fd))))
    return worst < 1e-4, worst, "< 1e-4"


def _literal_bound(e_bar: float, bound: float) -> float:
    if e_bar > bound:
        return bound
    if e_bar < -bound:
        return -bound
    return e_bar


def check_clamp(model: RobotModel, faults: Faults, n: int = 1_000_000):
    """Vectorised clamp equals the three-branch rule on every sampled point."""
    config = ControllerConfig()
    bound = config.rho * np.abs(np.array(config.f_ref))
    rng = _rng(8)
    e_dot = rng.uniform(-2.0, 2.0, (n, 3)) * 2 * bound
    # put a slice of points exactly on the bounds
    e_dot[: n // 100] = np.sign(e_dot[: n // 100]) * bound
    err = tracking_errors(np.zeros((n, 3)), e_dot, 0.0, 0.0, config, np.zeros((n, 3)))
    mismatches = 0
    cases_seen = set()
    for axis in range(3):
        b = float(bound[axis])
        literal = np.array([_literal_bound(v, b) for v in err.e_bar[:, axis].tolist()])
        mismatches += int(np.count_nonzero(literal != err.e_bar_bounded[:, axis]))
        cases_seen.update(np.unique(err.active_case[:, axis]).tolist())
    ok = mismatches == 0 and cases_seen == {Case.LOWER, Case.INTERIOR, Case.UPPER}
    return ok, float(mismatches), f"0 mismatches over {n} points (all three cases hit)"


def _still_scenario(model: RobotModel, dt: float) -> Scenario:
    return Scenario(model, (), hold_trajectory((0.0, 0.0, 0.0)), (0.0,) * 6, dt, dt)


def check_rk4_order(model: RobotModel, faults: Faults, horizon: float = 0.2):
    """End-state error ratio when halving the step (16 for a 4th-order method)."""
    theta0 = np.array([0.3, -0.8, 1.1, -0.4, 0.6, 0.2])
    scenario = _still_scenario(model, 1e-3)

    def end_state(dt):
        theta, qd = theta0.copy(), np.zeros(6)
        for _ in range(int(round(horizon / dt))):
            theta, qd = rk4_step(scenario, theta, qd, np.zeros(6), dt)
        return np.concatenate([theta, qd])

    coarse, mid, fine = (end_state(dt) for dt in (0.004, 0.002, 0.001))
    ratio = float(np.linalg.norm(coarse - mid) / np.linalg.norm(mid - fine))
    return 12.0 <= ratio <= 20.0, ratio, "in [12, 20]"


def check_static_hold(model: RobotModel, faults: Faults, n: int = 20, dt: float = 1e-3):
    """One step from rest under ``tau = g(theta)`` leaves the arm at rest."""
    scenario = _still_scenario(model, dt)
    worst = 0.0
    for theta in _rng(9).uniform(-np.pi, np.pi, (n, 6)):
        _, qd = rk4_step(scenario, theta, np.zeros(6), faults.gravity(model, theta), dt)
        worst = max(worst, float(np.max(np.abs(qd))))
    return worst < 1e-12, worst, "< 1e-12 rad/s"


CHECKS: dict[str, Callable] = {
    "mass_matrix": check_mass_matrix,
    "skew_symmetry": check_skew_symmetry,
    "lagrangian": check_lagrangian,
    "gravity": check_gravity,
    "energy": check_energy,
    "velocity_jacobian": check_velocity_jacobian,
    "jacobian_rate": check_jacobian_rate,
    "clamp": check_clamp,
    "rk4_order": check_rk4_order,
    "static_hold": check_static_hold,
}


def run_checks(names=None, faults: Faults = Faults(), model: RobotModel | None = None) -> list[CheckResult]:
    model = default_robot() if model is None else model
    selected = list(CHECKS) if not names else [n for n in CHECKS if any(f in n for f in names)]
    results = []
    for name in selected:
        start = time.perf_counter()
        ok, observed, expected = CHECKS[name](model, faults)
        results.append(CheckResult(name, bool(ok), float(observed), expected, time.perf_counter() - start))
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max((len(r.name) for r in results), default=5)
    lines = [f"{'check':<{width}}  result  {'observed':>12}  expected"]
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<{width}}  {mark:<6}  {r.observed:>12.4g}  {r.expected}  ({r.seconds:.1f} s)")
    return "\n".join(lines)
