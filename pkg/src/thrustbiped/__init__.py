"""Thruster-assisted biped locomotion library.

Full-order rigid-body dynamics with compliant ground contact, a reduced
variable-length pendulum model with thrust ("virtual buoyancy"), and a
thrust-aware capture-point stepping controller, plus a scenario-driven
simulation harness and CLI.
"""

from .contact import ContactForce, GroundParams, friction_force, ground_forces, normal_force
from .dynamics import (
    ControlInput,
    DynamicsMatrices,
    IllConditionedMassMatrix,
    bias_vector,
    forward_dynamics,
    input_maps,
    kinetic_energy,
    mass_matrix,
    potential_energy,
    total_energy,
)
from .gait import GaitConfig, GaitScheduler
from .integrate import NonFiniteDerivativeError, rk4_step, so3_rk4_step
from .kinematics import JointAngles, forward_kinematics, frame_velocities, position_jacobian
from .morphology import LEFT, RIGHT, RobotMorphology, default_morphology
from .planner import CapturePlan, plan_step
from .engine import Stepper, active_backend, compiled_available
from .simulate import (
    Disturbance,
    RunMetrics,
    Scenario,
    TrajectoryLog,
    run_scenario,
    standing_state,
)
from .so3 import integrate_rotation, rot_x, rot_y, skew
from .state import FullState, com_position, com_velocity, pack_state
from .swing import swing_trajectory
from .tracking import TrackerGains, WholeBodyTracker, allocate_thrusters, leg_ik
from .vlip import (
    OrbitalEnergy,
    ThrustCommand,
    VlipInfeasibleError,
    VlipState,
    capture_point,
    effective_gravity,
    orbital_energy,
    sagittal_projection,
    vlip_dynamics,
)

__version__ = "0.1.0"
