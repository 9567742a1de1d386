"""Joint-space rigid-body dynamics from the Lagrangian.

Equation of motion::

    tau = A(theta) theta_ddot + B(theta, theta_dot) theta_dot + g(theta) + tau_ext

``A`` is the mass matrix summed over links, ``B`` the Coriolis matrix built
from Christoffel symbols of ``A`` and ``g`` the gradient of potential energy.
Derivatives of ``A`` are analytic; a finite-difference mode exists only for
cross-checking.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kinematics import Chain, chain, cross, jacobian_derivatives, point_jacobians
from .model import RobotModel


# _PROXIMAL[k, i]: joint k moves link i
_PROXIMAL = np.arange(6)[:, None] <= np.arange(6)[None, :]


@dataclass(frozen=True)
class DynamicsTerms:
    mass: np.ndarray
    coriolis: np.ndarray
    gravity: np.ndarray


class _Parts(NamedTuple):
    c: Chain
    jv: np.ndarray  # (7, 3, 6); index 6 is the end-effector
    jw: np.ndarray
    inertia_world: np.ndarray  # (6, 3, 3)


def _parts(model: RobotModel, theta) -> _Parts:
    c = chain(model, theta)
    jv, jw = point_jacobians(c)
    R = c.rotations[:6]
    inertia_world = R @ model.inertias @ R.transpose(0, 2, 1)
    return _Parts(c, jv, jw, inertia_world)


def _mass(model: RobotModel, p: _Parts) -> np.ndarray:
    jv, jw = p.jv[:6], p.jw[:6]
    left = np.concatenate([jv.reshape(18, 6), jw.reshape(18, 6)])
    right = np.concatenate(
        [(model.masses[:, None, None] * jv).reshape(18, 6), (p.inertia_world @ jw).reshape(18, 6)]
    )
    A = left.T @ right
    return 0.5 * (A + A.T)


def _mass_derivatives(model: RobotModel, p: _Parts, dj=None) -> np.ndarray:
    """dA[k] = dA/dtheta_k, shape (6, 6, 6).

    Writing A = sum_i m_i Jv_i^T Jv_i + Jw_i^T Iw_i Jw_i, every derivative is
    G_k + G_k^T with G_k[j, l] = sum_i m_i dJv_i[:, j, k].Jv_i[:, l]
    + (dJw_i[:, j, k] - S_k Jw_i[:, j]).(Iw_i Jw_i)[:, l], where S_k is the
    cross-product matrix of joint axis k (only for k <= i). All links are
    stacked so G is a single batched matmul.
    """
    djv, djw = dj if dj is not None else jacobian_derivatives(p.c, p.jv, p.jw)
    jw = p.jw[:6]
    z = p.c.axes
    # spin[k, i, :, j] = z_k x Jw_i[:, j], zero unless joint k is proximal to link i
    spin = cross(z[:, None, None, :], jw.transpose(0, 2, 1)[None]).transpose(0, 1, 3, 2)
    spin *= _PROXIMAL[:, :, None, None]
    ang = djw[:6].transpose(3, 0, 1, 2) - spin  # (k, i, 3, j)
    lin = djv[:6].transpose(3, 0, 1, 2)
    left = np.concatenate([lin.reshape(6, 18, 6), ang.reshape(6, 18, 6)], axis=1)  # (k, 36, j)
    right = np.concatenate(
        [(model.masses[:, None, None] * p.jv[:6]).reshape(18, 6), (p.inertia_world @ jw).reshape(18, 6)]
    )
    G = left.transpose(0, 2, 1) @ right
    return G + G.transpose(0, 2, 1)


def _mass_derivatives_fd(model: RobotModel, theta, h: float = 1e-6) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    dA = np.empty((6, 6, 6))
    for k in range(6):
        e = np.zeros(6)
        e[k] = h
        dA[k] = (mass_matrix(model, theta + e) - mass_matrix(model, theta - e)) / (2 * h)
    return dA


def _christoffel(dA: np.ndarray, qd: np.ndarray) -> np.ndarray:
    # b_kj = 1/2 sum_i (da_kj/dq_i + da_ki/dq_j - da_ij/dq_k) qd_i
    t1 = qd @ dA.reshape(6, 36)  # sum_i qd_i dA[i, k, j]
    t23 = dA @ qd  # [j, k] = sum_i dA[j, k, i] qd_i
    return 0.5 * (t1.reshape(6, 6) + t23.T - t23)


def _christoffel_printed(dA: np.ndarray, qd: np.ndarray) -> np.ndarray:
    # first partial taken w.r.t. theta_j instead of theta_i; breaks skew-symmetry
    diag = np.einsum("jkj->kj", dA)
    t1 = diag * qd.sum()
    t2 = np.einsum("jki,i->kj", dA, qd)
    t3 = np.einsum("kij,i->kj", dA, qd)
    return 0.5 * (t1 + t2 - t3)


def _gravity(model: RobotModel, p: _Parts) -> np.ndarray:
    weight = -model.masses[:, None] * model.gravity_vec[None, :]  # (6, 3)
    return np.einsum("iaj,ia->j", p.jv[:6], weight)


def mass_matrix(model: RobotModel, theta) -> np.ndarray:
    return _mass(model, _parts(model, theta))


def mass_matrix_derivatives(model: RobotModel, theta, method: str = "analytic") -> np.ndarray:
    if method == "fd":
        return _mass_derivatives_fd(model, theta)
    return _mass_derivatives(model, _parts(model, theta))


def coriolis_matrix(model: RobotModel, theta, theta_dot, method: str = "analytic") -> np.ndarray:
    """Christoffel-form Coriolis matrix.

    ``method`` is ``"analytic"`` (default), ``"fd"`` (finite-difference dA,
    for cross-checks) or ``"printed"``, a deliberately wrong variant kept as
    a negative control for the verification suite.
    """
    qd = np.asarray(theta_dot, dtype=float)
    if method == "fd":
        return _christoffel(_mass_derivatives_fd(model, theta), qd)
    dA = _mass_derivatives(model, _parts(model, theta))
    if method == "printed":
        return _christoffel_printed(dA, qd)
    return _christoffel(dA, qd)


def gravity_vector(model: RobotModel, theta) -> np.ndarray:
    return _gravity(model, _parts(model, theta))


def dynamics_terms(model: RobotModel, theta, theta_dot) -> DynamicsTerms:
    p = _parts(model, theta)
    B = _christoffel(_mass_derivatives(model, p), np.asarray(theta_dot, dtype=float))
    return DynamicsTerms(_mass(model, p), B, _gravity(model, p))


class StepTerms(NamedTuple):
    """Dynamics and end-effector kinematics from a single chain evaluation."""

    mass: np.ndarray
    coriolis_force: np.ndarray  # B(theta, theta_dot) @ theta_dot
    gravity: np.ndarray
    ee_jacobian: np.ndarray  # (6, 6)
    ee_position: np.ndarray
    ee_rotation: np.ndarray
    ee_jacobian_rate: np.ndarray  # (6, 6)
    coriolis: np.ndarray


def step_terms(model: RobotModel, theta, theta_dot) -> StepTerms:
    qd = np.asarray(theta_dot, dtype=float)
    p = _parts(model, theta)
    djv, djw = jacobian_derivatives(p.c, p.jv, p.jw)
    A = _mass(model, p)
    dA = _mass_derivatives(model, p, (djv, djw))
    B = _christoffel(dA, qd)

    J7 = np.vstack([p.jv[6], p.jw[6]])
    J7dot = np.vstack([djv[6] @ qd, djw[6] @ qd])
    return StepTerms(A, B @ qd, _gravity(model, p), J7, p.c.points[6], p.c.rotations[6], J7dot, B)


def forward_dynamics(model: RobotModel, theta, theta_dot, tau, tau_ext=None) -> np.ndarray:
    """Joint accelerations for applied torque ``tau`` and external load ``tau_ext``."""
    terms = dynamics_terms(model, theta, theta_dot)
    rhs = np.asarray(tau, dtype=float) - terms.coriolis @ np.asarray(theta_dot, dtype=float) - terms.gravity
    if tau_ext is not None:
        rhs = rhs - tau_ext
    return cho_solve(cho_factor(terms.mass), rhs)


def solve_mass(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return cho_solve(cho_factor(A), rhs)


class TorqueCommand(NamedTuple):
    tau: np.ndarray
    saturated: np.ndarray  # per-joint booleans


def inverse_dynamics_torque(
    model: RobotModel, theta, theta_dot, theta_ddot_des, tau_ext=None, torque_sat: float | None = None
) -> TorqueCommand:
    """Computed torque ``A qdd + B qd + g + tau_ext``, optionally clamped."""
    qd = np.asarray(theta_dot, dtype=float)
    terms = dynamics_terms(model, theta, qd)
    tau = terms.mass @ np.asarray(theta_ddot_des, dtype=float) + terms.coriolis @ qd + terms.gravity
    if tau_ext is not None:
        tau = tau + tau_ext
    return clamp_torque(tau, torque_sat)


def clamp_torque(tau: np.ndarray, torque_sat: float | None) -> TorqueCommand:
    if torque_sat is None:
        return TorqueCommand(tau, np.zeros(6, dtype=bool))
    saturated = np.abs(tau) > torque_sat
    return TorqueCommand(np.clip(tau, -torque_sat, torque_sat), saturated)


def potential_energy(model: RobotModel, theta) -> float:
    """Gravitational potential energy, zero at the base plane."""
    com = chain(model, theta).points[:6]
    return float(-np.sum(model.masses * (com @ model.gravity_vec)))


def kinetic_energy(model: RobotModel, theta, theta_dot) -> float:
    qd = np.asarray(theta_dot, dtype=float)
    return float(0.5 * qd @ mass_matrix(model, theta) @ qd)


def total_energy(model: RobotModel, theta, theta_dot) -> tuple[float, float]:
    """``(kinetic, potential)`` in joules."""
    return kinetic_energy(model, theta, theta_dot), potential_energy(model, theta)
