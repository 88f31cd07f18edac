"""capguard: on-line collision avoidance for a capsule-modelled arm and human.

The package follows off-line Cartesian path segments with a 7-DOF arm and
deforms them on-line around capsule-modelled human obstacles, at a fixed
25 Hz velocity-level control loop.  It ships a deterministic simulator, a
scenario library, a CLI and a websocket bridge for live operation.
"""

from .control import (AvoidanceController, ControlOutput, ControllerParams,
                      ParamError, SingularityError, dls_solve)
from .geometry import (Capsule, ProximityResult, RelativeVelocityEstimator,
                       capsule_min_distance, min_distance_robot_human,
                       segment_closest_points)
from .kinematics import (ModelError, RobotModel, eef_position,
                         forward_kinematics, jacobian_at_point, jacobian_eef,
                         load_robot_model, robot_capsules)
from .sim import (Metrics, Scenario, ScenarioError, Simulation, Trace,
                  TraceRecord, load_scenario, run_scenario)
from .task import (PathSegment, TaskMachine, TaskMode, TaskPlan, WorkAction,
                   safety_zone)

__version__ = "0.1.0"

__all__ = [
    "AvoidanceController", "ControlOutput", "ControllerParams", "ParamError",
    "SingularityError", "dls_solve",
    "Capsule", "ProximityResult", "RelativeVelocityEstimator",
    "capsule_min_distance", "min_distance_robot_human", "segment_closest_points",
    "ModelError", "RobotModel", "eef_position", "forward_kinematics",
    "jacobian_at_point", "jacobian_eef", "load_robot_model", "robot_capsules",
    "Metrics", "Scenario", "ScenarioError", "Simulation", "Trace",
    "TraceRecord", "load_scenario", "run_scenario",
    "PathSegment", "TaskMachine", "TaskMode", "TaskPlan", "WorkAction",
    "safety_zone",
    "__version__",
]
