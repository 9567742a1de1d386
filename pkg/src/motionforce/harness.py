"""Task-space double-integrator harness for the acceleration law.

The manipulator is replaced by ``x_ddot = x_ddot_des`` integrated exactly
under a zero-order hold, which isolates the error dynamics the controller
is designed to impose. An optional spring-damper anchored at a fixed point
stands in for a contact that matches the controller's force model.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .contact import FREE, ContactState
from .controller import desired_acceleration, tracking_errors
from .model import ControllerConfig, Obstacle, ParametricTrajectory, reference_at


@dataclass(frozen=True)
class Anchor:
    """Per-axis spring-damper pulling on the point from ``point``."""

    point: tuple[float, float, float]
    stiffness: tuple[float, float, float] = (250e3, 250e3, 250e3)
    damping: tuple[float, float, float] = (100.0, 100.0, 100.0)

    def state(self, x, x_dot) -> ContactState:
        # the obstacle record only carries the gains; its geometry is unused here
        ob = Obstacle(self.point, 1.0, self.stiffness, self.damping)
        f = np.array(self.stiffness) * (x - np.array(self.point)) + np.array(self.damping) * x_dot
        return ContactState(True, np.array(self.point), np.zeros(3), np.zeros(3), f, np.zeros(3), ob)


class HarnessLog(NamedTuple):
    t: np.ndarray
    x: np.ndarray
    x_dot: np.ndarray
    e: np.ndarray
    e_sys: np.ndarray
    f: np.ndarray
    case: np.ndarray


def hold_trajectory(point) -> ParametricTrajectory:
    """Constant reference at ``point``."""
    return ParametricTrajectory(tuple(float(v) for v in point), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0),
                                (0.0, 0.0, 0.0), ("sin", "sin", "sin"))


def simulate(
    config: ControllerConfig,
    x0,
    v0=(0.0, 0.0, 0.0),
    trajectory=None,
    anchor: Anchor | None = None,
    dt: float = 1e-4,
    duration: float = 1.0,
) -> HarnessLog:
    """Closed loop of the acceleration law on a unit double integrator."""
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    if trajectory is None:
        trajectory = hold_trajectory((0.0, 0.0, 0.0))
    n = int(round(duration / dt))
    cols = {k: np.zeros((n + 1, 3)) for k in ("x", "x_dot", "e", "e_sys", "f")}
    case = np.zeros((n + 1, 3), dtype=int)
    t = np.arange(n + 1) * dt
    for k in range(n + 1):
        x_ref, xd_ref, xdd_ref = reference_at(trajectory, t[k])
        contact = FREE if anchor is None else anchor.state(x, v)
        err = tracking_errors(x, v, x_ref, xd_ref, config, contact.force)
        cols["x"][k], cols["x_dot"][k], cols["e"][k] = x, v, err.e
        cols["e_sys"][k], cols["f"][k] = err.e_sys, contact.force
        case[k] = err.active_case
        if k == n:
            break
        a, _ = desired_acceleration(err, xdd_ref, contact, config, v, dt=dt)
        x = x + v * dt + 0.5 * a * dt * dt
        v = v + a * dt
    return HarnessLog(t, cols["x"], cols["x_dot"], cols["e"], cols["e_sys"], cols["f"], case)


def settling_time(t, y, fraction: float = 0.02) -> float:
    """First time after which ``y`` stays within ``fraction * y[0]``."""
    y = np.asarray(y, dtype=float)
    outside = np.flatnonzero(y > fraction * y[0])
    if outside.size == 0:
        return float(t[0])
    last = outside[-1]
    if last + 1 >= len(t):
        return float("inf")
    return float(t[last + 1])


def decay_margin(log: HarnessLog, config: ControllerConfig, slack: float = 1e-6) -> float:
    """Smallest ``bound - |e_sys(t)|`` for ``bound = |e_sys(0)| exp(-K_min t) + slack``."""
    norm = np.linalg.norm(log.e_sys, axis=1)
    bound = norm[0] * np.exp(-min(config.gain_k) * log.t) + slack
    return float(np.min(bound - norm))
