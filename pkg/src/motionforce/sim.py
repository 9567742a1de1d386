"""Fixed-step closed-loop simulation.

The controller runs once per step and its torque is held over the step
(zero-order hold). The plant is integrated with classical RK4; the contact
force is re-evaluated at every stage so the stiff spring-damper stays
consistent with the integrated state.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from ._fast import fast_terms
from .contact import external_joint_torque, scene_contact
from .controller import control_step
from .dynamics import StepTerms
from .model import Scenario, dump_scenario, reference_at

DIVERGENCE_SPEED = 1e3  # rad/s
CONTACT_TRANSIENT = 0.2  # s excluded at the start of each contact episode
EPISODE_GAP = 0.05  # s; shorter separations do not end a contact episode
TRACKING_TRANSIENT = 2.0  # s


class JointState(NamedTuple):
    theta: np.ndarray
    theta_dot: np.ndarray
    t: float


class LogRecord(NamedTuple):
    t: float
    theta: np.ndarray
    theta_dot: np.ndarray
    x: np.ndarray
    x_ref: np.ndarray
    f: np.ndarray
    e: np.ndarray
    e_sys: np.ndarray
    tau: np.ndarray
    case: np.ndarray
    sat_acc: bool
    sat_tau: bool
    in_contact: bool
    near_singular: bool
    x_ddot_des: np.ndarray


class SimulationDiverged(RuntimeError):
    def __init__(self, message: str, records: list[LogRecord], log: "SimLog | None" = None):
        super().__init__(message)
        self.records = records
        self.log = log


def terms_at(model, theta, theta_dot) -> StepTerms:
    return StepTerms(*fast_terms(model, theta, theta_dot))


# torque override: (t, theta, theta_dot, terms) -> tau
TorqueFn = Callable[[float, np.ndarray, np.ndarray, StepTerms], np.ndarray]


def _plant_accel(scenario: Scenario, theta, theta_dot, tau, terms: StepTerms | None = None) -> np.ndarray:
    if terms is None:
        terms = terms_at(scenario.robot, theta, theta_dot)
    rhs = tau - terms.coriolis_force - terms.gravity
    if scenario.obstacles:
        x_dot = terms.ee_jacobian[:3] @ theta_dot
        contact = scene_contact(scenario.obstacles, terms.ee_position, x_dot)
        if contact.in_contact:
            rhs = rhs - external_joint_torque(terms.ee_jacobian, contact.force)
    return np.linalg.solve(terms.mass, rhs)


def rk4_step(scenario: Scenario, theta, theta_dot, tau, dt: float, terms: StepTerms | None = None):
    """Advance the plant by ``dt`` with torque ``tau`` held constant."""
    f = _plant_accel
    k1v = theta_dot
    k1a = f(scenario, theta, theta_dot, tau, terms)
    k2v = theta_dot + 0.5 * dt * k1a
    k2a = f(scenario, theta + 0.5 * dt * k1v, k2v, tau)
    k3v = theta_dot + 0.5 * dt * k2a
    k3a = f(scenario, theta + 0.5 * dt * k2v, k3v, tau)
    k4v = theta_dot + dt * k3a
    k4a = f(scenario, theta + dt * k3v, k4v, tau)
    theta_new = theta + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    theta_dot_new = theta_dot + dt / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a)
    return theta_new, theta_dot_new


def evaluate(scenario: Scenario, state: JointState, x_ddot_prev=None, R_hold=None,
             torque_fn: Optional[TorqueFn] = None):
    """Control law and log record at ``state`` without integrating."""
    terms = terms_at(scenario.robot, state.theta, state.theta_dot)
    refs = reference_at(scenario.trajectory, state.t)
    out = control_step(
        scenario.robot, state.theta, state.theta_dot, refs, scenario.obstacles,
        scenario.controller, x_ddot_prev, R_hold, terms=terms, dt=scenario.dt,
    )
    cmd = out.command
    tau = cmd.tau if torque_fn is None else np.asarray(torque_fn(state.t, state.theta, state.theta_dot, terms))
    record = LogRecord(
        state.t, state.theta, state.theta_dot, out.x, refs[0], out.contact.force, out.errors.e,
        out.errors.e_sys, tau, out.errors.active_case, bool(cmd.accel_saturated.any()),
        bool(cmd.torque_saturated.any()), out.contact.in_contact, cmd.near_singular, cmd.x_ddot_des,
    )
    return tau, terms, record


def step(scenario: Scenario, state: JointState, x_ddot_prev=None, R_hold=None,
         torque_fn: Optional[TorqueFn] = None, step_index: int | None = None):
    """One closed-loop step: control at ``state.t``, then RK4 over ``dt``.

    Returns ``(next_state, record)``; ``record`` describes ``state`` and the
    command applied over the step. ``step_index`` keeps time on an exact
    ``k * dt`` grid during long runs.
    """
    if not (np.all(np.isfinite(state.theta)) and np.all(np.isfinite(state.theta_dot))):
        raise SimulationDiverged(f"non-finite state at t={state.t}", [])
    tau, terms, record = evaluate(scenario, state, x_ddot_prev, R_hold, torque_fn)
    theta, theta_dot = rk4_step(scenario, state.theta, state.theta_dot, tau, scenario.dt, terms)
    t_next = state.t + scenario.dt if step_index is None else (step_index + 1) * scenario.dt
    return JointState(theta, theta_dot, t_next), record


_VECTOR_FIELDS = {
    "theta": 6, "theta_dot": 6, "x": 3, "x_ref": 3, "f": 3, "e": 3, "e_sys": 3, "tau": 6,
    "case": 3, "x_ddot_des": 3,
}
_FLAG_FIELDS = ("sat_acc", "sat_tau", "in_contact", "near_singular")


@dataclass
class SimLog:
    """Column-oriented per-step log."""

    t: np.ndarray
    columns: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    def __getattr__(self, name):
        columns = self.__dict__.get("columns", {})
        if name in columns:
            return columns[name]
        raise AttributeError(name)

    @classmethod
    def allocate(cls, n: int, meta: dict) -> "SimLog":
        cols = {k: np.zeros((n, w)) for k, w in _VECTOR_FIELDS.items()}
        cols["case"] = np.zeros((n, 3), dtype=int)
        cols.update({k: np.zeros(n, dtype=bool) for k in _FLAG_FIELDS})
        return cls(np.zeros(n), cols, meta)

    def put(self, i: int, rec: LogRecord) -> None:
        self.t[i] = rec.t
        for name in _VECTOR_FIELDS:
            self.columns[name][i] = getattr(rec, name)
        for name in _FLAG_FIELDS:
            self.columns[name][i] = getattr(rec, name)

    def truncated(self, n: int) -> "SimLog":
        return SimLog(self.t[:n].copy(), {k: v[:n].copy() for k, v in self.columns.items()}, dict(self.meta))

    def record(self, i: int) -> LogRecord:
        values = {name: self.columns[name][i] for name in (*_VECTOR_FIELDS, *_FLAG_FIELDS)}
        return LogRecord(t=float(self.t[i]), **values)


@dataclass(frozen=True)
class RunMetrics:
    max_abs_force: np.ndarray
    force_bound_violation_ratio: np.ndarray
    free_space_rms_error: float
    contact_duration: float
    saturation_fraction: float
    contact_episodes: int = 0

    def as_dict(self) -> dict:
        return {
            "max_abs_force_n": [float(v) for v in self.max_abs_force],
            "force_bound_violation_ratio": [float(v) for v in self.force_bound_violation_ratio],
            "free_space_rms_error_m": float(self.free_space_rms_error),
            "contact_duration_s": float(self.contact_duration),
            "saturation_fraction": float(self.saturation_fraction),
            "contact_episodes": int(self.contact_episodes),
        }


def scenario_hash(scenario: Scenario) -> str:
    return hashlib.sha256(dump_scenario(scenario).encode()).hexdigest()


def contact_episodes(in_contact: np.ndarray, dt: float, gap: float = EPISODE_GAP) -> list[tuple[int, int]]:
    """Half-open index ranges of contact episodes.

    Separations shorter than ``gap`` seconds are bridged, so a contact that
    chatters at the boundary counts as one episode.
    """
    idx = np.flatnonzero(in_contact)
    if idx.size == 0:
        return []
    max_skip = max(1, int(round(gap / dt)))
    breaks = np.flatnonzero(np.diff(idx) > max_skip)
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    ends = np.concatenate([idx[breaks], [idx[-1]]]) + 1
    return list(zip(starts.tolist(), ends.tolist()))


def compute_metrics(log: SimLog, f_ref, dt: float, contact_transient: float = CONTACT_TRANSIENT,
                    tracking_transient: float = TRACKING_TRANSIENT) -> RunMetrics:
    f = log.f
    f_ref = np.abs(np.asarray(f_ref, dtype=float))
    episodes = contact_episodes(log.in_contact, dt)
    settled = np.zeros(len(log), dtype=bool)
    skip = int(round(contact_transient / dt))
    for start, end in episodes:
        settled[start + skip:end] = True
    settled &= log.in_contact
    if settled.any():
        ratio = np.max(np.abs(f[settled]), axis=0) / f_ref
    else:
        ratio = np.zeros(3)
    free = (~log.in_contact) & (log.t >= tracking_transient)
    if free.any():
        rms = float(np.sqrt(np.mean(np.sum(log.e[free] ** 2, axis=1))))
    else:
        rms = 0.0
    saturated = log.sat_acc | log.sat_tau
    return RunMetrics(
        max_abs_force=np.max(np.abs(f), axis=0) if len(log) else np.zeros(3),
        force_bound_violation_ratio=ratio,
        free_space_rms_error=rms,
        contact_duration=float(np.count_nonzero(log.in_contact) * dt),
        saturation_fraction=float(np.mean(saturated)) if len(log) else 0.0,
        contact_episodes=len(episodes),
    )


def run(scenario: Scenario, torque_fn: Optional[TorqueFn] = None, progress: Callable[[float], None] | None = None):
    """Simulate the whole scenario; returns ``(SimLog, RunMetrics)``."""
    dt = scenario.dt
    n_steps = int(math.floor(scenario.duration / dt + 1e-9))
    meta = {
        "scenario": scenario.name,
        "scenario_hash": scenario_hash(scenario),
        "dt": dt,
        "duration": scenario.duration,
    }
    log = SimLog.allocate(n_steps + 1, meta)
    state = JointState(np.array(scenario.initial_joints), np.zeros(6), 0.0)
    R_hold = None
    if scenario.controller.alpha_mode == "hold":
        R_hold = terms_at(scenario.robot, state.theta, state.theta_dot).ee_rotation
    x_ddot_prev = None
    for k in range(n_steps + 1):
        try:
            if k == n_steps:
                _, _, record = evaluate(scenario, state, x_ddot_prev, R_hold, torque_fn)
                log.put(k, record)
                break
            next_state, record = step(scenario, state, x_ddot_prev, R_hold, torque_fn, step_index=k)
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            partial = log.truncated(k)
            raise SimulationDiverged(
                f"numerical failure at t={state.t:.6f}: {exc}",
                [partial.record(i) for i in range(max(0, k - 10), k)], partial,
            ) from exc
        log.put(k, record)
        if not (np.all(np.isfinite(next_state.theta)) and np.all(np.isfinite(next_state.theta_dot))) or np.max(
            np.abs(next_state.theta_dot)
        ) > DIVERGENCE_SPEED:
            partial = log.truncated(k + 1)
            raise SimulationDiverged(
                f"divergence at t={next_state.t:.6f}: |theta_dot| = {np.max(np.abs(next_state.theta_dot)):.3g} rad/s",
                [partial.record(i) for i in range(max(0, k - 9), k + 1)], partial,
            )
        x_ddot_prev = record.x_ddot_des
        state = next_state
        if progress is not None and k % 1000 == 0:
            progress(state.t)
    metrics = compute_metrics(log, scenario.controller.f_ref, dt)
    return log, metrics
