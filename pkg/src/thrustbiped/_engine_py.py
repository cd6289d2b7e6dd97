"""Pure-Python stepping kernel (reference path).

Advances the full-order plant through fixed RK4 substeps with the control
input held constant; ground forces are re-evaluated from the stage states.
The injected actuator/contact work rides along as an extra integrated
state, so energy audits see quadrature-exact bookkeeping.  The compiled
kernel in ``_core`` replicates this math; this module is the behavioral
contract and the fallback when no compiler is available.
"""

from __future__ import annotations

import numpy as np

from .contact import GroundParams, ground_forces
from .dynamics import ControlInput, _chains, accel_from_chains, thruster_world_forces
from .integrate import so3_rk4_step
from .kinematics import _foot_offset_dphi
from .morphology import RobotMorphology
from .state import NX, FullState


def _derivative(morph: RobotMorphology, ground: GroundParams, x: np.ndarray, u: ControlInput):
    """(ydot (21,), injected power) at state x under held input u."""
    st = FullState(x)
    chains = _chains(morph, st)
    u_g, _, _ = ground_forces(
        ground, chains[0].p_F, chains[0].pdot_F, chains[1].p_F, chains[1].pdot_F
    )
    vdot = accel_from_chains(morph, st, chains, u, u_g)
    ydot = np.empty(NX - 9)
    ydot[0:7] = x[21:28]       # qdot
    ydot[7:9] = x[28:30]       # knee rates
    ydot[9:12] = vdot[0:3]     # omega dot
    ydot[12:19] = vdot[3:10]   # qddot
    ydot[19:21] = u.u_j[4:6]   # commanded knee accelerations

    power = float(u.u_j[0] * x[24] + u.u_j[1] * x[25]
                  + u.u_j[2] * x[26] + u.u_j[3] * x[27])
    u_t_world = thruster_world_forces(morph, st, u.u_t)
    for k, ch in enumerate(chains):
        power += float(u_t_world[3 * k:3 * k + 3] @ ch.pdot_T)
        # ground power through the mass-carrying coordinates: exclude the
        # knee-rate part of the foot velocity (massless knee convention)
        dpk = x[28 + k]
        pdot_F_v = ch.pdot_F - ch.A2 @ (_foot_offset_dphi(morph, x[16 + k]) * dpk)
        power += float(u_g[3 * k:3 * k + 3] @ pdot_F_v)
    return ydot, power


def step_block(
    morph: RobotMorphology,
    ground: GroundParams,
    x: np.ndarray,
    u_j: np.ndarray,
    u_t: np.ndarray,
    n_sub: int,
    dt: float,
):
    """n_sub RK4 substeps under a zero-order-held control input.

    Returns (new state (30,), injected work over the block [J]).
    """
    x = np.asarray(x, dtype=float).copy()
    u = ControlInput(u_j=u_j, u_t=u_t)
    R = x[0:9].reshape(3, 3).copy()
    # the last entry of the augmented y is the accumulated injected work
    y = np.concatenate([x[9:], [0.0]])

    def f(R_stage, y_stage):
        xs = np.concatenate([R_stage.reshape(9), y_stage[:-1]])
        ydot, power = _derivative(morph, ground, xs, u)
        return y_stage[9:12], np.concatenate([ydot, [power]])

    for _ in range(n_sub):
        R, y = so3_rk4_step(f, R, y, dt)
    out = np.empty(NX)
    out[0:9] = R.reshape(9)
    out[9:] = y[:-1]
    return out, float(y[-1])
