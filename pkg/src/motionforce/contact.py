"""Spring-damper contact between the end-effector point and static spheres."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import Obstacle


class DegenerateContactError(ValueError):
    """The query point coincides with the sphere centre; no surface normal exists."""


def _zero3() -> np.ndarray:
    return np.zeros(3)


@dataclass(frozen=True)
class ContactState:
    in_contact: bool = False
    surface_point: np.ndarray = field(default_factory=_zero3)
    surface_velocity: np.ndarray = field(default_factory=_zero3)
    surface_accel: np.ndarray = field(default_factory=_zero3)
    force: np.ndarray = field(default_factory=_zero3)
    force_rate: np.ndarray = field(default_factory=_zero3)
    obstacle: Obstacle | None = None


FREE = ContactState()


def detect_contact(obstacle: Obstacle, x) -> tuple[bool, np.ndarray]:
    """Strict penetration test plus the radial projection onto the sphere."""
    x = np.asarray(x, dtype=float)
    center = np.array(obstacle.center)
    offset = x - center
    dist = float(np.sqrt(offset @ offset))
    if dist == 0.0:
        raise DegenerateContactError(f"point {x} is at the centre of obstacle {obstacle.center}")
    return dist < obstacle.radius, center + obstacle.radius * offset / dist


def contact_force(obstacle: Obstacle, x, x_dot) -> ContactState:
    """Force the end-effector exerts on the obstacle.

    Inside the sphere: ``K (x - x_s) + D (x_dot - xs_dot)`` per axis with
    ``x_s`` the undeformed surface point and a static obstacle. Outside: zero.
    """
    penetrating, surface = detect_contact(obstacle, x)
    if not penetrating:
        return FREE
    x_dot = np.asarray(x_dot, dtype=float)
    f = np.array(obstacle.stiffness) * (np.asarray(x, dtype=float) - surface) + np.array(obstacle.damping) * x_dot
    return ContactState(True, surface, np.zeros(3), np.zeros(3), f, np.zeros(3), obstacle)


def sliding_surface_velocity(obstacle: Obstacle, x, x_dot) -> np.ndarray:
    """Velocity of the radially projected surface point as ``x`` moves.

    ``d/dt (c + r u)`` with ``u = (x - c) / |x - c|`` is ``(r / |x - c|)``
    times the part of ``x_dot`` tangent to the sphere.
    """
    offset = np.asarray(x, dtype=float) - np.array(obstacle.center)
    dist = float(np.sqrt(offset @ offset))
    if dist == 0.0:
        raise DegenerateContactError(f"point {x} is at the centre of obstacle {obstacle.center}")
    n = offset / dist
    x_dot = np.asarray(x_dot, dtype=float)
    return (obstacle.radius / dist) * (x_dot - n * (n @ x_dot))


def contact_force_rate(obstacle: Obstacle, contact: ContactState, x_dot, x_ddot) -> np.ndarray:
    """Time derivative of the contact force for a static obstacle."""
    if not contact.in_contact:
        return np.zeros(3)
    return (
        np.array(obstacle.stiffness) * (np.asarray(x_dot, dtype=float) - contact.surface_velocity)
        + np.array(obstacle.damping) * (np.asarray(x_ddot, dtype=float) - contact.surface_accel)
    )


def scene_contact(obstacles: Sequence[Obstacle], x, x_dot) -> ContactState:
    """Combined contact over several obstacles; forces add.

    The returned state's geometry (surface point, obstacle) is that of the
    deepest penetration, which is what the controller's saturated cases use.
    """
    states = [s for s in (contact_force(ob, x, x_dot) for ob in obstacles) if s.in_contact]
    if not states:
        return FREE
    if len(states) == 1:
        return states[0]
    x = np.asarray(x, dtype=float)
    deepest = max(states, key=lambda s: np.linalg.norm(x - s.surface_point))
    total = np.sum([s.force for s in states], axis=0)
    return ContactState(
        True, deepest.surface_point, deepest.surface_velocity, deepest.surface_accel, total,
        np.zeros(3), deepest.obstacle,
    )


def external_joint_torque(J7, f) -> np.ndarray:
    """Joint torque balancing an end-effector force ``f`` (no moment)."""
    J7 = np.asarray(J7, dtype=float)
    return J7[:3].T @ np.asarray(f, dtype=float)
