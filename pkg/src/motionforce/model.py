"""Configuration types, scenario files and reference trajectories.

Every type here is a frozen dataclass holding plain tuples, so instances are
hashable, compare field-for-field and can be shared between concurrent runs.
Numeric arrays are materialised lazily where the numerical code needs them.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline

Vec3 = tuple[float, float, float]
Mat3 = tuple[Vec3, Vec3, Vec3]


class ScenarioError(Exception):
    """Base class for scenario loading problems."""


class ScenarioParseError(ScenarioError):
    pass


class ScenarioValidationError(ScenarioError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class TrajectoryRangeError(ValueError):
    pass


def _vec(values, n: int, name: str) -> tuple:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size != n:
        raise ScenarioValidationError(name, f"expected {n} values, got {arr.size}")
    return tuple(float(v) for v in arr)


def _mat(values, rows: int, cols: int, name: str) -> tuple:
    arr = np.asarray(values, dtype=float)
    if arr.size != rows * cols:
        raise ScenarioValidationError(name, f"expected {rows}x{cols} values, got {arr.size}")
    arr = arr.reshape(rows, cols)
    return tuple(tuple(float(v) for v in row) for row in arr)


# ---------------------------------------------------------------------------
# robot


@dataclass(frozen=True)
class LinkParam:
    """Inertial description of one link.

    ``inertia_body`` is expressed in the link's centre-of-mass frame, and
    ``com_frame`` is the 4x4 homogeneous transform from the link's DH frame
    to that centre-of-mass frame.
    """

    mass: float
    inertia_body: Mat3
    com_frame: tuple = tuple(tuple(float(i == j) for j in range(4)) for i in range(4))

    def __post_init__(self):
        object.__setattr__(self, "mass", float(self.mass))
        object.__setattr__(self, "inertia_body", _mat(self.inertia_body, 3, 3, "inertia_body"))
        object.__setattr__(self, "com_frame", _mat(self.com_frame, 4, 4, "com_frame"))

    def validate(self, name: str = "link") -> None:
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise ScenarioValidationError(f"{name}.mass", "mass must be > 0")
        inertia = np.array(self.inertia_body)
        if not np.all(np.isfinite(inertia)):
            raise ScenarioValidationError(f"{name}.inertia_body", "non-finite entry")
        if np.max(np.abs(inertia - inertia.T)) > 1e-12:
            raise ScenarioValidationError(f"{name}.inertia_body", "inertia tensor is not symmetric")
        moments = np.linalg.eigvalsh(inertia)
        if moments[0] <= 0:
            raise ScenarioValidationError(f"{name}.inertia_body", "inertia tensor is not positive-definite")
        # principal moments of a physical body obey I1 + I2 >= I3
        tol = 1e-12 * moments[-1]
        if moments[0] + moments[1] < moments[2] - tol:
            raise ScenarioValidationError(
                f"{name}.inertia_body", "principal moments violate the triangle inequality"
            )
        frame = np.array(self.com_frame)
        rot = frame[:3, :3]
        if (
            np.max(np.abs(rot.T @ rot - np.eye(3))) > 1e-9
            or abs(np.linalg.det(rot) - 1.0) > 1e-9
            or np.max(np.abs(frame[3] - [0, 0, 0, 1])) > 0
        ):
            raise ScenarioValidationError(f"{name}.com_frame", "not a rigid transform")


@dataclass(frozen=True)
class RobotModel:
    """Six-link serial chain.

    ``dh_table`` rows are ``(a, alpha, d, theta_offset)`` in the standard
    (distal) Denavit-Hartenberg convention: ``Rz(theta) Tz(d) Tx(a) Rx(alpha)``.
    """

    links: tuple[LinkParam, ...]
    dh_table: tuple[tuple[float, float, float, float], ...]
    gravity: Vec3 = (0.0, 0.0, -9.81)

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "dh_table", tuple(_vec(r, 4, "dh_table") for r in self.dh_table))
        object.__setattr__(self, "gravity", _vec(self.gravity, 3, "gravity"))

    def validate(self) -> None:
        if len(self.links) != 6:
            raise ScenarioValidationError("robot.links", f"expected 6 links, got {len(self.links)}")
        if len(self.dh_table) != 6:
            raise ScenarioValidationError("robot.dh_table", f"expected 6 rows, got {len(self.dh_table)}")
        for i, link in enumerate(self.links):
            link.validate(f"robot.links[{i}]")
        if not np.all(np.isfinite(self.dh_table)):
            raise ScenarioValidationError("robot.dh_table", "non-finite entry")
        if not np.all(np.isfinite(self.gravity)):
            raise ScenarioValidationError("robot.gravity", "non-finite entry")

    def with_gravity(self, gravity) -> "RobotModel":
        return RobotModel(self.links, self.dh_table, tuple(gravity))

    # arrays used by the numerical code; cached per instance
    @cached_property
    def dh(self) -> np.ndarray:
        return np.array(self.dh_table, dtype=float)

    @cached_property
    def masses(self) -> np.ndarray:
        return np.array([link.mass for link in self.links])

    @cached_property
    def inertias(self) -> np.ndarray:
        return np.array([link.inertia_body for link in self.links])

    @cached_property
    def com_frames(self) -> np.ndarray:
        return np.array([link.com_frame for link in self.links])

    @cached_property
    def gravity_vec(self) -> np.ndarray:
        return np.array(self.gravity)


def _cylinder(mass: float, radius: float, length: float) -> tuple[float, float]:
    axial = 0.5 * mass * radius**2
    transverse = mass * (3 * radius**2 + length**2) / 12.0
    return axial, transverse


def default_robot() -> RobotModel:
    """A tabletop-cobot parameter set with the CR3 kinematic layout.

    Link lengths follow the manufacturer's published reach figures
    (0.274 m upper arm, 0.230 m forearm, UR-style wrist). Masses and inertias
    are plausible uniform-cylinder estimates, about 10 kg of moving mass,
    decreasing from base to tip. Nothing downstream depends on these exact
    numbers.
    """
    half_pi = math.pi / 2
    dh_table = (
        (0.0, half_pi, 0.1348, 0.0),
        (-0.274, 0.0, 0.0, -half_pi),
        (-0.230, 0.0, 0.0, 0.0),
        (0.0, half_pi, 0.1283, -half_pi),
        (0.0, -half_pi, 0.116, 0.0),
        (0.0, 0.0, 0.1105, 0.0),
    )
    # (mass, radius, length, long axis, COM offset in the DH frame)
    layout = (
        (3.5, 0.060, 0.150, "y", (0.0, -0.030, 0.0)),
        (3.0, 0.050, 0.274, "x", (0.137, 0.0, 0.020)),
        (1.6, 0.040, 0.230, "x", (0.115, 0.0, 0.010)),
        (0.9, 0.040, 0.120, "z", (0.0, 0.0, -0.020)),
        (0.8, 0.040, 0.110, "z", (0.0, 0.0, -0.020)),
        (0.4, 0.035, 0.050, "z", (0.0, 0.0, -0.020)),
    )
    links = []
    for mass, radius, length, axis, offset in layout:
        axial, transverse = _cylinder(mass, radius, length)
        diag = {"x": (axial, transverse, transverse),
                "y": (transverse, axial, transverse),
                "z": (transverse, transverse, axial)}[axis]
        frame = np.eye(4)
        frame[:3, 3] = offset
        links.append(LinkParam(mass, np.diag(diag), frame))
    return RobotModel(tuple(links), dh_table)


# ---------------------------------------------------------------------------
# scene and controller


@dataclass(frozen=True)
class Obstacle:
    """Static sphere with diagonal contact stiffness and damping."""

    center: Vec3
    radius: float
    stiffness: Vec3
    damping: Vec3

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center, 3, "obstacle.center"))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "stiffness", _vec(self.stiffness, 3, "obstacle.stiffness"))
        object.__setattr__(self, "damping", _vec(self.damping, 3, "obstacle.damping"))

    def validate(self, name: str = "obstacle") -> None:
        if not np.all(np.isfinite(self.center)):
            raise ScenarioValidationError(f"{name}.center", "non-finite entry")
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ScenarioValidationError(f"{name}.radius", "radius must be > 0")
        if not all(math.isfinite(k) and k > 0 for k in self.stiffness):
            raise ScenarioValidationError(f"{name}.stiffness", "all stiffness entries must be > 0")
        # the saturated-case acceleration law divides by rho * damping
        if not all(math.isfinite(d) and d > 0 for d in self.damping):
            raise ScenarioValidationError(f"{name}.damping", "all damping entries must be > 0")


@dataclass(frozen=True)
class ControllerConfig:
    """Gains and limits of the combined motion-force controller.

    ``law`` picks the acceleration law: ``"sampled"`` (exact over one
    zero-order-hold step), ``"continuous"`` (continuous-time law, contact
    force rate solved implicitly) or ``"lagged"`` (continuous-time law with
    the force rate from the previous step's acceleration).
    ``alpha_mode`` is ``"zero"`` or ``"hold"`` (orientation hold).
    ``surface_motion`` sets the contact-point velocity the controller uses in
    its force-rate model: ``"sliding"`` follows the radial projection as the
    end-effector slides over the sphere, ``"static"`` takes it as zero.
    """

    gain_c: Vec3 = (150.0, 150.0, 150.0)
    gain_k: Vec3 = (350.0, 350.0, 350.0)
    rho: float = 0.05
    f_ref: Vec3 = (40.0, 50.0, 60.0)
    f_ref_rate: Vec3 = (0.0, 0.0, 0.0)
    accel_sat: float = 50.0
    torque_sat: float = 250.0
    alpha_mode: str = "zero"
    law: str = "sampled"
    surface_motion: str = "sliding"
    saturated_fallback: bool = True

    def __post_init__(self):
        for name in ("gain_c", "gain_k", "f_ref", "f_ref_rate"):
            object.__setattr__(self, name, _vec(getattr(self, name), 3, f"controller.{name}"))
        for name in ("rho", "accel_sat", "torque_sat"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def validate(self) -> None:
        for name in ("gain_c", "gain_k"):
            if not all(math.isfinite(v) and v > 0 for v in getattr(self, name)):
                raise ScenarioValidationError(f"controller.{name}", "all gains must be > 0")
        if not (math.isfinite(self.rho) and 0 < self.rho <= 1):
            raise ScenarioValidationError("controller.rho", "rho must satisfy 0 < rho <= 1")
        for name in ("f_ref", "f_ref_rate"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ScenarioValidationError(f"controller.{name}", "non-finite entry")
        for name in ("accel_sat", "torque_sat"):
            if not getattr(self, name) > 0:
                raise ScenarioValidationError(f"controller.{name}", "limit must be > 0")
        if self.alpha_mode not in ("zero", "hold"):
            raise ScenarioValidationError("controller.alpha_mode", "expected 'zero' or 'hold'")
        if self.law not in ("sampled", "continuous", "lagged"):
            raise ScenarioValidationError("controller.law", "expected 'sampled', 'continuous' or 'lagged'")
        if self.surface_motion not in ("sliding", "static"):
            raise ScenarioValidationError("controller.surface_motion", "expected 'sliding' or 'static'")


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class ParametricTrajectory:
    """Per-axis ``offset + amplitude * fn(omega * t + phase)``, fn in {sin, cos}."""

    offset: Vec3
    amplitude: Vec3
    omega: Vec3
    phase: Vec3 = (0.0, 0.0, 0.0)
    function: tuple[str, str, str] = ("sin", "sin", "sin")

    def __post_init__(self):
        for name in ("offset", "amplitude", "omega", "phase"):
            object.__setattr__(self, name, _vec(getattr(self, name), 3, f"trajectory.{name}"))
        object.__setattr__(self, "function", tuple(str(f).strip() for f in self.function))

    def validate(self) -> None:
        for name in ("offset", "amplitude", "omega", "phase"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ScenarioValidationError(f"trajectory.{name}", "non-finite entry")
        if len(self.function) != 3 or any(f not in ("sin", "cos") for f in self.function):
            raise ScenarioValidationError("trajectory.function", "expected three of sin/cos")


@dataclass(frozen=True)
class SampledTrajectory:
    """Tabulated reference; rows of ``times`` and 3-vectors per quantity."""

    times: tuple[float, ...]
    positions: tuple[Vec3, ...]
    velocities: tuple[Vec3, ...]
    accelerations: tuple[Vec3, ...]

    def __post_init__(self):
        n = len(self.times)
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        for name in ("positions", "velocities", "accelerations"):
            object.__setattr__(self, name, _mat(getattr(self, name), n, 3, f"trajectory.{name}"))

    def validate(self) -> None:
        t = np.array(self.times)
        if t.size < 2:
            raise ScenarioValidationError("trajectory.times", "need at least two samples")
        if not np.all(np.isfinite(t)) or np.any(np.diff(t) <= 0):
            raise ScenarioValidationError("trajectory.times", "time grid must be strictly increasing")
        for name in ("positions", "velocities", "accelerations"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ScenarioValidationError(f"trajectory.{name}", "non-finite entry")

    @cached_property
    def _splines(self):
        t = np.array(self.times)
        pos = CubicHermiteSpline(t, np.array(self.positions), np.array(self.velocities), axis=0)
        vel = CubicHermiteSpline(t, np.array(self.velocities), np.array(self.accelerations), axis=0)
        return pos, pos.derivative(), vel.derivative()


TrajectorySpec = Union[ParametricTrajectory, SampledTrajectory]


def reference_at(traj: TrajectorySpec, t: float):
    """Reference position, velocity and acceleration at time ``t``."""
    if t < 0:
        raise TrajectoryRangeError(f"t={t} is negative")
    if isinstance(traj, ParametricTrajectory):
        off, amp, om, ph = (np.array(v) for v in (traj.offset, traj.amplitude, traj.omega, traj.phase))
        arg = om * t + ph
        sin, cos = np.sin(arg), np.cos(arg)
        is_sin = np.array([f == "sin" for f in traj.function])
        f0 = np.where(is_sin, sin, cos)
        f1 = np.where(is_sin, cos, -sin)
        return off + amp * f0, amp * om * f1, -amp * om**2 * f0
    t_end = traj.times[-1]
    if t > t_end or t < traj.times[0]:
        raise TrajectoryRangeError(f"t={t} outside sampled grid [{traj.times[0]}, {t_end}]")
    pos, vel, acc = traj._splines
    return pos(t), vel(t), acc(t)


# ---------------------------------------------------------------------------
# scenario


@dataclass(frozen=True)
class Scenario:
    robot: RobotModel
    obstacles: tuple[Obstacle, ...]
    trajectory: TrajectorySpec
    initial_joints: tuple[float, ...]
    duration: float
    dt: float
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "initial_joints", _vec(self.initial_joints, 6, "sim.initial_joints"))
        object.__setattr__(self, "duration", float(self.duration))
        object.__setattr__(self, "dt", float(self.dt))

    def validate(self) -> "Scenario":
        self.robot.validate()
        for i, obstacle in enumerate(self.obstacles):
            obstacle.validate(f"obstacle[{i}]")
        self.trajectory.validate()
        self.controller.validate()
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ScenarioValidationError("sim.dt", "dt must be > 0")
        if not (math.isfinite(self.duration) and self.duration >= self.dt):
            raise ScenarioValidationError("sim.duration", "duration must be >= dt")
        if not np.all(np.isfinite(self.initial_joints)):
            raise ScenarioValidationError("sim.initial_joints", "non-finite entry")
        if isinstance(self.trajectory, SampledTrajectory) and self.trajectory.times[-1] < self.duration:
            raise ScenarioValidationError("trajectory.times", "sampled grid ends before the run does")
        return self

    def replace(self, **changes) -> "Scenario":
        from dataclasses import replace

        return replace(self, **changes)


# ---------------------------------------------------------------------------
# file format
#
#   # comment
#   [section]
#   key_unit = value[, value ...]
#
# Sections: robot (once), link (6x when the robot is inline), obstacle
# (repeatable), trajectory, controller, sim. Numbers may be written as
# ``pi``, ``pi/40``, ``4*pi/20`` or ``-0.5*pi`` besides plain floats.

_SECTION = re.compile(r"^\[(\w+)\]$")
_PI_EXPR = re.compile(r"^([+-]?)(?:([0-9.eE+-]+)\s*\*\s*)?pi(?:\s*/\s*([0-9.eE+-]+))?$")


def _number(text: str) -> float:
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    m = _PI_EXPR.match(text)
    if not m:
        raise ScenarioParseError(f"cannot parse number {text!r}")
    sign, num, den = m.groups()
    value = math.pi * (float(num) if num else 1.0) / (float(den) if den else 1.0)
    return -value if sign == "-" else value


def _numbers(text: str) -> list[float]:
    return [_number(part) for part in text.split(",")]


def parse_sections(text: str) -> list[tuple[str, list[tuple[str, str]]]]:
    sections: list[tuple[str, list[tuple[str, str]]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            sections.append((m.group(1), []))
            continue
        if "=" not in line:
            raise ScenarioParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if not sections:
            raise ScenarioParseError(f"line {lineno}: key outside of any section")
        key, value = (s.strip() for s in line.split("=", 1))
        sections[-1][1].append((key, value))
    return sections


class _Section:
    def __init__(self, name: str, items: list[tuple[str, str]]):
        self.name = name
        self.items = items
        self.used: set[str] = set()

    def has(self, key: str) -> bool:
        return any(k == key for k, _ in self.items)

    def raw(self, key: str, default=None) -> str:
        for k, v in self.items:
            if k == key:
                self.used.add(k)
                return v
        if default is None:
            raise ScenarioParseError(f"[{self.name}] missing key {key!r}")
        return default

    def all(self, key: str) -> list[str]:
        self.used.add(key)
        return [v for k, v in self.items if k == key]

    def vec(self, key: str, n: int = 3, default=None):
        if default is not None and not self.has(key):
            return default
        try:
            values = _numbers(self.raw(key))
        except ScenarioParseError as exc:
            raise ScenarioParseError(f"[{self.name}] {key}: {exc}") from None
        if len(values) != n:
            raise ScenarioParseError(f"[{self.name}] {key}: expected {n} values, got {len(values)}")
        return values

    def num(self, key: str, default=None) -> float:
        if default is not None and not self.has(key):
            return default
        try:
            return _number(self.raw(key))
        except ScenarioParseError as exc:
            raise ScenarioParseError(f"[{self.name}] {key}: {exc}") from None

    def check_unused(self) -> None:
        unknown = [k for k, _ in self.items if k not in self.used]
        if unknown:
            raise ScenarioParseError(f"[{self.name}] unknown keys: {', '.join(sorted(set(unknown)))}")


def _parse_robot(sections) -> RobotModel:
    robot_secs = [s for s in sections if s.name == "robot"]
    if len(robot_secs) != 1:
        raise ScenarioParseError("expected exactly one [robot] section")
    sec = robot_secs[0]
    model = sec.raw("model", "default")
    if model == "default":
        sec.check_unused()
        return default_robot()
    if model != "inline":
        raise ScenarioParseError(f"[robot] model must be 'default' or 'inline', got {model!r}")
    dh = [sec.vec(f"dh{i}_a_m_alpha_rad_d_m_offset_rad", 4) for i in range(1, 7)]
    gravity = sec.vec("gravity_m_per_s2", 3, default=[0.0, 0.0, -9.81])
    sec.check_unused()
    links = []
    for link in (s for s in sections if s.name == "link"):
        links.append(
            LinkParam(
                link.num("mass_kg"),
                np.array(link.vec("inertia_body_kgm2", 9)).reshape(3, 3),
                np.array(link.vec("com_frame", 16)).reshape(4, 4),
            )
        )
        link.check_unused()
    return RobotModel(tuple(links), tuple(tuple(r) for r in dh), tuple(gravity))


def _parse_trajectory(sec: _Section) -> TrajectorySpec:
    kind = sec.raw("kind")
    if kind == "parametric":
        traj = ParametricTrajectory(
            offset=sec.vec("offset_m"),
            amplitude=sec.vec("amplitude_m"),
            omega=sec.vec("omega_rad_per_s"),
            phase=sec.vec("phase_rad", default=[0.0, 0.0, 0.0]),
            function=tuple(f.strip() for f in sec.raw("function", "sin, sin, sin").split(",")),
        )
    elif kind == "sampled":
        rows = [_numbers(r) for r in sec.all("row_t_s_pos_m_vel_m_per_s_acc_m_per_s2")]
        if any(len(r) != 10 for r in rows):
            raise ScenarioParseError("[trajectory] sampled rows need 10 values: t, x(3), xdot(3), xddot(3)")
        arr = np.array(rows) if rows else np.zeros((0, 10))
        traj = SampledTrajectory(arr[:, 0], arr[:, 1:4], arr[:, 4:7], arr[:, 7:10])
    else:
        raise ScenarioParseError(f"[trajectory] unknown kind {kind!r}")
    sec.check_unused()
    return traj


def parse_scenario(text: str, name: str = "") -> Scenario:
    """Parse and validate scenario text."""
    sections = [_Section(n, items) for n, items in parse_sections(text)]
    known = {"robot", "link", "obstacle", "trajectory", "controller", "sim"}
    for sec in sections:
        if sec.name not in known:
            raise ScenarioParseError(f"unknown section [{sec.name}]")

    def single(section_name: str) -> _Section:
        found = [s for s in sections if s.name == section_name]
        if len(found) != 1:
            raise ScenarioParseError(f"expected exactly one [{section_name}] section, found {len(found)}")
        return found[0]

    robot = _parse_robot(sections)
    obstacles = []
    for sec in (s for s in sections if s.name == "obstacle"):
        obstacles.append(
            Obstacle(
                center=sec.vec("center_m"),
                radius=sec.num("radius_m"),
                stiffness=sec.vec("stiffness_n_per_m"),
                damping=sec.vec("damping_ns_per_m"),
            )
        )
        sec.check_unused()
    trajectory = _parse_trajectory(single("trajectory"))

    ctl = single("controller")
    defaults = ControllerConfig()
    controller = ControllerConfig(
        gain_c=ctl.vec("gain_c_per_s"),
        gain_k=ctl.vec("gain_k_per_s"),
        rho=ctl.num("rho_s_per_kg"),
        f_ref=ctl.vec("f_ref_n"),
        f_ref_rate=ctl.vec("f_ref_rate_n_per_s", default=list(defaults.f_ref_rate)),
        accel_sat=ctl.num("accel_sat_m_per_s2", default=defaults.accel_sat),
        torque_sat=ctl.num("torque_sat_nm", default=defaults.torque_sat),
        alpha_mode=ctl.raw("alpha_mode", defaults.alpha_mode),
        law=ctl.raw("accel_law", defaults.law),
        surface_motion=ctl.raw("surface_motion", defaults.surface_motion),
    )
    ctl.check_unused()

    sim = single("sim")
    if sim.has("initial_joints_deg"):
        q0 = np.radians(sim.vec("initial_joints_deg", 6))
    else:
        q0 = sim.vec("initial_joints_rad", 6)
    duration = sim.num("duration_s")
    dt = sim.num("dt_s", default=1e-3)
    sim.check_unused()

    scenario = Scenario(robot, tuple(obstacles), trajectory, tuple(q0), duration, dt, controller, name)
    return scenario.validate()


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read scenario {path}: {exc.strerror}") from exc
    return parse_scenario(text, name=path.stem)


def _fmt(values) -> str:
    return ", ".join(repr(float(v)) for v in np.asarray(values, dtype=float).reshape(-1))


def dump_scenario(scenario: Scenario) -> str:
    """Serialise a scenario; ``parse_scenario(dump_scenario(s)) == s``."""
    out = []
    if scenario.robot == default_robot():
        out += ["[robot]", "model = default", ""]
    else:
        out += ["[robot]", "model = inline"]
        for i, row in enumerate(scenario.robot.dh_table, 1):
            out.append(f"dh{i}_a_m_alpha_rad_d_m_offset_rad = {_fmt(row)}")
        out += [f"gravity_m_per_s2 = {_fmt(scenario.robot.gravity)}", ""]
        for link in scenario.robot.links:
            out += [
                "[link]",
                f"mass_kg = {link.mass!r}",
                f"inertia_body_kgm2 = {_fmt(link.inertia_body)}",
                f"com_frame = {_fmt(link.com_frame)}",
                "",
            ]
    for ob in scenario.obstacles:
        out += [
            "[obstacle]",
            f"center_m = {_fmt(ob.center)}",
            f"radius_m = {ob.radius!r}",
            f"stiffness_n_per_m = {_fmt(ob.stiffness)}",
            f"damping_ns_per_m = {_fmt(ob.damping)}",
            "",
        ]
    traj = scenario.trajectory
    out.append("[trajectory]")
    if isinstance(traj, ParametricTrajectory):
        out += [
            "kind = parametric",
            f"offset_m = {_fmt(traj.offset)}",
            f"amplitude_m = {_fmt(traj.amplitude)}",
            f"omega_rad_per_s = {_fmt(traj.omega)}",
            f"phase_rad = {_fmt(traj.phase)}",
            f"function = {', '.join(traj.function)}",
        ]
    else:
        out.append("kind = sampled")
        for t, p, v, a in zip(traj.times, traj.positions, traj.velocities, traj.accelerations):
            out.append(f"row_t_s_pos_m_vel_m_per_s_acc_m_per_s2 = {_fmt([t, *p, *v, *a])}")
    c = scenario.controller
    out += [
        "",
        "[controller]",
        f"gain_c_per_s = {_fmt(c.gain_c)}",
        f"gain_k_per_s = {_fmt(c.gain_k)}",
        f"rho_s_per_kg = {c.rho!r}",
        f"f_ref_n = {_fmt(c.f_ref)}",
        f"f_ref_rate_n_per_s = {_fmt(c.f_ref_rate)}",
        f"accel_sat_m_per_s2 = {c.accel_sat!r}",
        f"torque_sat_nm = {c.torque_sat!r}",
        f"alpha_mode = {c.alpha_mode}",
        f"accel_law = {c.law}",
        f"surface_motion = {c.surface_motion}",
        "",
        "[sim]",
        f"initial_joints_rad = {_fmt(scenario.initial_joints)}",
        f"duration_s = {scenario.duration!r}",
        f"dt_s = {scenario.dt!r}",
        "",
    ]
    return "\n".join(out)


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped in the repository's ``scenarios/`` folder."""
    here = Path(__file__).resolve()
    for parent in here.parents:
        candidate = parent / "scenarios" / f"{name}.scenario"
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"bundled scenario {name!r} not found")
