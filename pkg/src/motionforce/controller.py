"""Combined motion-force controller.

Pipeline per control step::

    x -> e -> e_bar = e_dot + C e -> e_bar_b (clamped) -> e_sys = e_bar_b + rho f
      -> x_ddot_des -> theta_ddot_des -> tau

``e_sys`` is driven to zero with first-order dynamics ``de_sys/dt = -K e_sys``.
In free space that reduces to trajectory tracking (``e_bar -> 0``); in contact
the clamp on ``e_bar`` caps the exerted force at ``|f_ref|`` per axis.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import NamedTuple, Sequence

import numpy as np

from .contact import (
    ContactState, contact_force_rate, external_joint_torque, scene_contact, sliding_surface_velocity,
)
from .dynamics import StepTerms, clamp_torque, step_terms
from .model import ControllerConfig, Obstacle, RobotModel

SINGULAR_THRESHOLD = 1e-4
DLS_DAMPING = 1e-3


class Case(IntEnum):
    INTERIOR = 0
    UPPER = 1  # e_bar above the bound
    LOWER = -1  # e_bar below the negative bound


class InconsistentStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class ErrorState:
    e: np.ndarray
    e_dot: np.ndarray
    e_bar: np.ndarray
    e_bar_bounded: np.ndarray
    e_sys: np.ndarray
    active_case: np.ndarray  # int array of Case values


@dataclass(frozen=True)
class MotionCommand:
    x_ddot_des: np.ndarray
    alpha: np.ndarray
    theta_ddot_des: np.ndarray
    tau: np.ndarray
    accel_saturated: np.ndarray
    torque_saturated: np.ndarray
    near_singular: bool

    @property
    def saturation_flags(self) -> np.ndarray:
        return np.concatenate([self.accel_saturated, self.torque_saturated])


def error_bound(config: ControllerConfig) -> np.ndarray:
    return config.rho * np.abs(np.array(config.f_ref))


def tracking_errors(x, x_dot, x_ref, xdot_ref, config: ControllerConfig, f) -> ErrorState:
    e = np.asarray(x, dtype=float) - x_ref
    e_dot = np.asarray(x_dot, dtype=float) - xdot_ref
    e_bar = e_dot + np.array(config.gain_c) * e
    bound = error_bound(config)
    case = np.where(e_bar > bound, Case.UPPER, np.where(e_bar < -bound, Case.LOWER, Case.INTERIOR))
    e_bar_b = np.clip(e_bar, -bound, bound)
    e_sys = e_bar_b + config.rho * np.asarray(f, dtype=float)
    return ErrorState(e, e_dot, e_bar, e_bar_b, e_sys, case.astype(int))


def desired_acceleration(
    err: ErrorState,
    x_ddot_ref,
    contact: ContactState,
    config: ControllerConfig,
    x_dot,
    x_ddot_prev=None,
    dt: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Linear acceleration command per axis, clamped to ``config.accel_sat``.

    Continuous-time laws (``dt`` is None or ``config.law != "sampled"``):

    * interior: ``-K e_sys + x_ddot_ref - C e_dot - rho f_dot`` with
      ``f_dot = Ko (x_dot - xs_dot) + D (x_ddot - xs_ddot)`` in contact;
      ``law="continuous"`` solves for ``x_ddot`` implicitly, ``law="lagged"``
      uses ``x_ddot_prev``;
    * saturated, in contact:
      ``(-K e_sys + rho D xs_ddot - rho Ko (x_dot - xs_dot) -+ rho |f_ref_dot|) / (rho D)``;
    * saturated without contact: the interior law with ``f_dot = 0``.

    ``law="sampled"`` with a step ``dt`` picks the constant acceleration that
    makes ``e_sys`` follow ``exp(-K dt)`` exactly across one zero-order-hold
    step of a task-space double integrator. It tends to the continuous laws
    as ``dt -> 0`` but stays stable when ``dt`` exceeds the contact time
    constant ``D / Ko``.
    """
    K = np.array(config.gain_k)
    C = np.array(config.gain_c)
    rho = config.rho
    x_dot = np.asarray(x_dot, dtype=float)
    x_ddot_ref = np.asarray(x_ddot_ref, dtype=float)
    if config.law == "sampled" and dt is not None and dt > 0:
        decay = np.expm1(-K * dt) / dt
        h = dt
    else:
        decay = -K
        h = 0.0
    drive = decay * err.e_sys
    # tracking part shared by every interior variant
    num = drive + x_ddot_ref * (1.0 + 0.5 * C * h) - C * err.e_dot
    den = 1.0 + 0.5 * C * h
    out = num / den

    if contact.in_contact:
        ob = contact.obstacle
        Ko, Do = np.array(ob.stiffness), np.array(ob.damping)
        rel_vel = x_dot - contact.surface_velocity
        if config.law == "lagged":
            prev = np.zeros(3) if x_ddot_prev is None else np.asarray(x_ddot_prev, dtype=float)
            out = (num - rho * contact_force_rate(ob, contact, x_dot, prev)) / den
        else:
            out = (num - rho * Ko * rel_vel + rho * Do * contact.surface_accel) / (
                den + rho * Do + 0.5 * rho * Ko * h
            )
        rate = rho * np.abs(np.array(config.f_ref_rate))
        sign = np.where(err.active_case == Case.UPPER, -1.0, 1.0)
        saturated_law = (drive + rho * Do * contact.surface_accel - rho * Ko * rel_vel + sign * rate) / (
            rho * Do + 0.5 * rho * Ko * h
        )
        out = np.where(err.active_case != Case.INTERIOR, saturated_law, out)
    elif np.any(err.active_case != Case.INTERIOR) and not config.saturated_fallback:
        raise InconsistentStateError("e_bar saturated while no obstacle is in contact")

    limit = config.accel_sat
    flags = np.abs(out) > limit
    return np.clip(out, -limit, limit), flags


def joint_acceleration_command(J7, J7_rate, theta_dot, x_ddot_des, alpha) -> tuple[np.ndarray, bool]:
    """Solve ``J7 qdd = [x_ddot_des; alpha] - J7_rate qd``.

    Falls back to damped least squares when the smallest singular value of
    ``J7`` drops below ``SINGULAR_THRESHOLD``. Returns ``(qdd, near_singular)``.
    """
    J7 = np.asarray(J7, dtype=float)
    rhs = np.concatenate([x_ddot_des, alpha]) - np.asarray(J7_rate) @ np.asarray(theta_dot, dtype=float)
    sigma_min = np.linalg.svd(J7, compute_uv=False)[-1]
    if sigma_min >= SINGULAR_THRESHOLD:
        return np.linalg.solve(J7, rhs), False
    lam2 = DLS_DAMPING**2
    return J7.T @ np.linalg.solve(J7 @ J7.T + lam2 * np.eye(6), rhs), True


def rotation_error(R, R_goal) -> np.ndarray:
    """Axis-angle vector of ``R R_goal^T`` (base frame)."""
    Re = np.asarray(R) @ np.asarray(R_goal).T
    cos_angle = np.clip((np.trace(Re) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(cos_angle)
    vee = np.array([Re[2, 1] - Re[1, 2], Re[0, 2] - Re[2, 0], Re[1, 0] - Re[0, 1]])
    if angle < 1e-9:
        return 0.5 * vee
    return angle / (2.0 * np.sin(angle)) * vee


def angular_command(config: ControllerConfig, R, omega, R_hold) -> np.ndarray:
    if config.alpha_mode == "zero" or R_hold is None:
        return np.zeros(3)
    # critically damped PD, natural frequency sqrt(min K)
    kp = float(min(config.gain_k))
    kd = 2.0 * np.sqrt(kp)
    return -kp * rotation_error(R, R_hold) - kd * np.asarray(omega)


class ControlOutput(NamedTuple):
    command: MotionCommand
    errors: ErrorState
    contact: ContactState
    x: np.ndarray
    x_dot: np.ndarray


def control_step(
    model: RobotModel,
    theta,
    theta_dot,
    refs,
    obstacles: Sequence[Obstacle],
    config: ControllerConfig,
    x_ddot_prev=None,
    R_hold=None,
    terms: StepTerms | None = None,
    dt: float | None = None,
) -> ControlOutput:
    """One evaluation of the full control law at joint state ``(theta, theta_dot)``.

    ``refs`` is ``(x_ref, xdot_ref, xddot_ref)``. ``terms`` may carry the
    dynamics already evaluated at this state (the simulator reuses them for
    its first integration stage). ``dt`` is the hold period used by the
    sampled acceleration law.
    """
    x_ref, xdot_ref, xddot_ref = refs
    qd = np.asarray(theta_dot, dtype=float)
    if terms is None:
        terms = step_terms(model, theta, qd)
    J7 = terms.ee_jacobian
    twist = J7 @ qd
    x, x_dot, omega = terms.ee_position, twist[:3], twist[3:]

    contact = scene_contact(obstacles, x, x_dot)
    err = tracking_errors(x, x_dot, x_ref, xdot_ref, config, contact.force)
    seen = contact
    if contact.in_contact and config.surface_motion == "sliding":
        seen = replace(contact, surface_velocity=sliding_surface_velocity(contact.obstacle, x, x_dot))
    x_ddot_des, acc_flags = desired_acceleration(err, xddot_ref, seen, config, x_dot, x_ddot_prev, dt)
    alpha = angular_command(config, terms.ee_rotation, omega, R_hold)
    qdd_des, near_singular = joint_acceleration_command(J7, terms.ee_jacobian_rate, qd, x_ddot_des, alpha)

    tau_ext = external_joint_torque(J7, contact.force)
    tau = terms.mass @ qdd_des + terms.coriolis_force + terms.gravity + tau_ext
    torque = clamp_torque(tau, config.torque_sat)
    cmd = MotionCommand(x_ddot_des, alpha, qdd_des, torque.tau, acc_flags, torque.saturated, near_singular)
    return ControlOutput(cmd, err, contact, x, x_dot)
