"""Combined motion and force control for a six-joint serial manipulator.

Modules: ``model`` (robot, obstacles, scenarios), ``kinematics``,
``dynamics``, ``contact``, ``controller``, ``sim``, ``harness``, ``verify``
and ``cli``.
"""
from .contact import ContactState, contact_force, detect_contact, scene_contact
from .controller import Case, ErrorState, MotionCommand, control_step, desired_acceleration, tracking_errors
from .dynamics import coriolis_matrix, gravity_vector, mass_matrix
from .kinematics import end_effector_jacobian, forward_kinematics, jacobian_rate, link_jacobian
from .model import (
    ControllerConfig, Obstacle, RobotModel, Scenario, ScenarioError, ScenarioParseError,
    ScenarioValidationError, bundled_scenario_path, default_robot, load_scenario, parse_scenario,
)
from .sim import RunMetrics, SimLog, SimulationDiverged, run, step

__all__ = [
    "Case", "ContactState", "ControllerConfig", "ErrorState", "MotionCommand", "Obstacle", "RobotModel",
    "RunMetrics", "Scenario", "ScenarioError", "ScenarioParseError", "ScenarioValidationError", "SimLog",
    "SimulationDiverged", "bundled_scenario_path", "contact_force", "control_step", "coriolis_matrix", "default_robot",
    "desired_acceleration", "detect_contact", "end_effector_jacobian", "forward_kinematics", "gravity_vector",
    "jacobian_rate", "link_jacobian", "load_scenario", "mass_matrix", "parse_scenario", "run", "scene_contact",
    "step", "tracking_errors",
]
