"""Capture-point step planning.

Each plane gets its own capture offset computed with the thrust-reduced
effective gravity; the frontal plane adds an alternating step-width bias.
Targets beyond the step-length saturation radius are clamped to the
reachable ball and flagged: repeated clamping is how an uncapturable push
shows up in the logs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gait import GaitConfig
from .morphology import LEFT
from .vlip import ThrustCommand, VlipState, capture_point, effective_gravity


@dataclass
class CapturePlan:
    """One step's worth of planning output."""

    offset_x: float          # sagittal capture offset from the CoM [m]
    offset_y: float          # frontal capture offset, width bias excluded [m]
    width_bias: float        # alternating frontal stance offset [m]
    target: np.ndarray       # commanded foot position, inertial [m]
    g_eff: float             # effective gravity used [m/s^2]
    t_step: float            # nominal step duration [s]
    thrust: ThrustCommand    # thrust command the offsets assume
    clamped: bool            # target was pulled back to the reachable ball


def nominal_thrust(gait: GaitConfig, m: float, g: float = 9.81) -> ThrustCommand:
    """Vertical thrust at the configured fraction of body weight."""
    return ThrustCommand.vertical(gait.thrust_fraction * m * g)


def plan_step(
    state: VlipState,
    thrust: ThrustCommand,
    gait: GaitConfig,
    swing_side: str,
    g: float = 9.81,
    time_to_go: float = 0.0,
) -> CapturePlan:
    """Foot target for the upcoming support exchange.

    Sagittal: CoM x plus the capture offset of the velocity error relative
    to the commanded walking speed.  Frontal: CoM y plus the capture
    offset of ydot, biased outward by the step width with the sign of the
    incoming stance side.  The combined offset is saturated at
    ``gait.max_step_length``.

    ``time_to_go`` is the remaining swing time: the pendulum state is
    propagated to touchdown in closed form before computing the offsets
    (planning on the instantaneous state systematically under-captures,
    because the pendulum keeps diverging while the swing leg travels).
    """
    g_eff = effective_gravity(state.m, thrust.magnitude, g, thrust.theta_T)
    w = np.sqrt(g_eff / state.z0)
    rel = np.array([state.p_B[0] - state.c[0], state.p_B[1] - state.c[1]])
    vel = np.array([float(state.v_B[0]), float(state.v_B[1])])
    if time_to_go > 0.0:
        ch, sh = np.cosh(w * time_to_go), np.sinh(w * time_to_go)
        rel, vel = rel * ch + (vel / w) * sh, rel * w * sh + vel * ch
    com_pred = np.array([state.c[0], state.c[1]]) + rel

    off_x = capture_point(vel[0] - gait.desired_speed,
                          state.z0, state.m, thrust.magnitude, g)
    off_y = capture_point(vel[1], state.z0, state.m, thrust.magnitude, g)
    width = gait.step_width if swing_side == LEFT else -gait.step_width

    offset = np.array([off_x, off_y + width])
    norm = float(np.linalg.norm(offset))
    clamped = False
    if norm > gait.max_step_length:
        offset *= gait.max_step_length / norm
        clamped = True

    target = np.array([com_pred[0] + offset[0], com_pred[1] + offset[1], 0.0])
    return CapturePlan(
        offset_x=off_x,
        offset_y=off_y,
        width_bias=width,
        target=target,
        g_eff=g_eff,
        t_step=gait.t_step,
        thrust=thrust,
        clamped=clamped,
    )
