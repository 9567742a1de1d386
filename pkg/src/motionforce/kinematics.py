"""Forward kinematics and geometric Jacobians of the six-joint chain.

Frame numbering: poses 1..6 are the link centre-of-mass frames, pose 7 is
the end-effector (the distal DH frame of the last row). Joint ``j`` (0-based)
rotates about the z axis of DH frame ``j`` through that frame's origin.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import RobotModel

# link index that each of the 7 tracked points is rigidly attached to
_POINT_LINK = np.array([0, 1, 2, 3, 4, 5, 5])
_JOINT = np.arange(6)
# _ACTIVE[n, j]: joint j moves point n
_ACTIVE = _JOINT[None, :] <= _POINT_LINK[:, None]
# _BEFORE[j, k]: k < j
_BEFORE = _JOINT[None, :] < _JOINT[:, None]


@dataclass(frozen=True)
class FramePose:
    rotation: np.ndarray
    position: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.position
        return T


@dataclass(frozen=True)
class SpatialJacobian:
    linear: np.ndarray
    angular: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return np.vstack([self.linear, self.angular])


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Broadcasting cross product over the last axis (much cheaper than np.cross)."""
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


class Chain(NamedTuple):
    """Everything the Jacobian and dynamics code needs from one FK pass."""

    axes: np.ndarray  # (6, 3) joint axes z_0..z_5 in the base frame
    origins: np.ndarray  # (6, 3) points on the joint axes
    points: np.ndarray  # (7, 3) COM 1..6 and end-effector positions
    rotations: np.ndarray  # (7, 3, 3) orientations of the same frames


def dh_transforms(model: RobotModel, theta) -> np.ndarray:
    """Per-joint DH transforms, shape (6, 4, 4)."""
    a, alpha, d, offset = model.dh.T
    q = np.asarray(theta, dtype=float) + offset
    ct, st = np.cos(q), np.sin(q)
    ca, sa = np.cos(alpha), np.sin(alpha)
    T = np.zeros((6, 4, 4))
    T[:, 0, 0] = ct
    T[:, 0, 1] = -st * ca
    T[:, 0, 2] = st * sa
    T[:, 0, 3] = a * ct
    T[:, 1, 0] = st
    T[:, 1, 1] = ct * ca
    T[:, 1, 2] = -ct * sa
    T[:, 1, 3] = a * st
    T[:, 2, 1] = sa
    T[:, 2, 2] = ca
    T[:, 2, 3] = d
    T[:, 3, 3] = 1.0
    return T


def chain(model: RobotModel, theta) -> Chain:
    local = dh_transforms(model, theta)
    frames = np.empty((7, 4, 4))
    frames[0] = np.eye(4)
    for j in range(6):
        frames[j + 1] = frames[j] @ local[j]
    com = frames[1:] @ model.com_frames
    points = np.vstack([com[:, :3, 3], frames[6, :3, 3]])
    rotations = np.concatenate([com[:, :3, :3], frames[6:7, :3, :3]])
    return Chain(frames[:6, :3, 2], frames[:6, :3, 3], points, rotations)


def forward_kinematics(model: RobotModel, theta) -> list[FramePose]:
    """Poses of the six COM frames followed by the end-effector frame."""
    c = chain(model, theta)
    return [FramePose(c.rotations[n], c.points[n]) for n in range(7)]


def end_effector_pose(model: RobotModel, theta) -> FramePose:
    c = chain(model, theta)
    return FramePose(c.rotations[6], c.points[6])


def point_jacobians(c: Chain) -> tuple[np.ndarray, np.ndarray]:
    """Linear and angular Jacobians of all 7 frames, each shaped (7, 3, 6)."""
    lever = c.points[:, None, :] - c.origins[None, :, :]  # (7, 6, 3)
    jv = cross(c.axes[None, :, :], lever) * _ACTIVE[:, :, None]
    jw = np.broadcast_to(c.axes[None, :, :], (7, 6, 3)) * _ACTIVE[:, :, None]
    return jv.transpose(0, 2, 1), jw.transpose(0, 2, 1)


def jacobian_derivatives(c: Chain, jv: np.ndarray, jw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of the point Jacobians w.r.t. each joint angle.

    Returns ``(djv, djw)`` shaped (7, 3, 6, 6) with ``[..., j, k]`` holding
    d(column j)/d(theta_k). Uses the closed forms
    ``d(z_j x r)/d theta_k = z_k x (z_j x r)`` for ``k < j`` and
    ``z_j x (z_k x r_k)`` otherwise.
    """
    z = c.axes
    cols = jv.transpose(0, 2, 1)  # (7, j, 3)
    # k < j: axis k rotates column j rigidly
    early = cross(z[None, None, :, :], cols[:, :, None, :])  # (7, j, k, 3)
    # k >= j: column j's lever arm moves with point velocity due to joint k
    late = cross(z[None, :, None, :], cols[:, None, :, :])  # (7, j, k, 3)
    djv = np.where(_BEFORE[None, :, :, None], early, late)
    zz = cross(z[None, :, :], z[:, None, :])  # zz[j, k] = z_k x z_j
    djw = np.where(_BEFORE[:, :, None], zz, 0.0)[None] * _ACTIVE[:, :, None, None]
    return djv.transpose(0, 3, 1, 2), djw.transpose(0, 3, 1, 2)


def link_jacobian(model: RobotModel, theta, i: int) -> SpatialJacobian:
    """Jacobian of frame ``i`` (1..6 COM frames, 7 end-effector)."""
    if not 1 <= i <= 7:
        raise ValueError(f"frame index must be in 1..7, got {i}")
    jv, jw = point_jacobians(chain(model, theta))
    return SpatialJacobian(jv[i - 1].copy(), jw[i - 1].copy())


def end_effector_jacobian(model: RobotModel, theta) -> np.ndarray:
    return link_jacobian(model, theta, 7).full


def jacobian_rate(model: RobotModel, theta, theta_dot) -> np.ndarray:
    """Time derivative of the 6x6 end-effector Jacobian along ``theta_dot``."""
    c = chain(model, theta)
    jv, jw = point_jacobians(c)
    djv, djw = jacobian_derivatives(c, jv, jw)
    qd = np.asarray(theta_dot, dtype=float)
    return np.vstack([djv[6] @ qd, djw[6] @ qd])
