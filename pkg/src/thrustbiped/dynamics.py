"""Full-order equations of motion.

The mass matrix and bias are assembled by projecting each part's
Newton-Euler terms through its velocity Jacobians (equivalent to the
Euler-Lagrange derivation, including the rotation-group correction terms,
but testable term by term against energy and finite-difference oracles).
Knee angles ride along as pure double integrators driven by the commanded
knee accelerations; they carry no inertia.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import so3
from .kinematics import JointAngles, leg_chain
from .morphology import SIDES, RobotMorphology
from .state import (
    NA,
    NV,
    NX,
    SL_DPHI_K,
    SL_OMEGA,
    SL_PHI_K,
    SL_Q,
    SL_QDOT,
    SL_R,
    FullState,
)

# Estimated condition number above which the mass matrix is treated as a
# configuration error rather than something to regularize away.
COND_LIMIT = 1e12


class IllConditionedMassMatrix(RuntimeError):
    """Mass matrix is singular/ill-conditioned; the model setup is wrong."""


@dataclass(frozen=True)
class ControlInput:
    """Joint actuation and thruster forces.

    ``u_j`` = [pelvis_L, pelvis_R, hip_L, hip_R, knee_accel_L, knee_accel_R];
    the first four are torques [N m], the knee entries are commanded
    angular accelerations [rad/s^2].  ``u_t`` stacks the left and right
    thruster forces in the inertial frame [N].
    """

    u_j: np.ndarray = field(default_factory=lambda: np.zeros(6))
    u_t: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        object.__setattr__(self, "u_j", np.asarray(self.u_j, dtype=float).reshape(6))
        object.__setattr__(self, "u_t", np.asarray(self.u_t, dtype=float).reshape(6))
        if not (np.all(np.isfinite(self.u_j)) and np.all(np.isfinite(self.u_t))):
            raise ValueError("control input must be finite")


@dataclass
class DynamicsMatrices:
    """M a + h = B_j u_j + B_t u_t + B_g u_g with a = [vdot; knee accels]."""

    M: np.ndarray    # 12 x 12, knee rows/cols are identity
    h: np.ndarray    # 12
    B_j: np.ndarray  # 12 x 6
    B_t: np.ndarray  # 12 x 6
    B_g: np.ndarray  # 12 x 6


def _chains(morph: RobotMorphology, state: FullState):
    out = []
    for side in SIDES:
        g, ph, pk, dg, dph, dpk = state.joints(side)
        ja = JointAngles(g, ph, pk, dg, dph, dpk)
        out.append(leg_chain(morph, state.R, state.p_B, ja, side,
                             omega=state.omega, pbdot=state.x[21:24]))
    return out


def _mass_bias_10(morph: RobotMorphology, state: FullState, chains=None):
    """Mass matrix and bias on the 10 mass-carrying velocity coordinates."""
    if chains is None:
        chains = _chains(morph, state)
    M = np.zeros((NV, NV))
    h = np.zeros(NV)
    g_vec = np.array([0.0, 0.0, -morph.g])
    omega = state.omega

    # torso: Jv picks pbdot, Jw picks omega
    M[3:6, 3:6] += morph.m_B * np.eye(3)
    M[0:3, 0:3] += morph.I_B
    h[3:6] += -morph.m_B * g_vec
    h[0:3] += np.cross(omega, morph.I_B @ omega)

    for ch in chains:
        for m_i, I_i, Jv, Jw, a_vp, w, w_vp in (
            (morph.m_H, morph.I_H, ch.Jv_H, ch.Jw_H, ch.a_H_vp, ch.w1, ch.w1_vp),
            (morph.m_K, morph.I_K, ch.Jv_K, ch.Jw_K, ch.a_K_vp, ch.w2, ch.w2_vp),
        ):
            M += m_i * Jv.T @ Jv + Jw.T @ I_i @ Jw
            h += m_i * Jv.T @ (a_vp - g_vec)
            h += Jw.T @ (I_i @ w_vp + np.cross(w, I_i @ w))
    return M, h


def mass_matrix(morph: RobotMorphology, state: FullState) -> np.ndarray:
    """12x12 mass matrix; the two knee rows/columns are identity."""
    M = np.eye(NA)
    M[:NV, :NV], _ = _mass_bias_10(morph, state)
    return M


def bias_vector(morph: RobotMorphology, state: FullState) -> np.ndarray:
    """Coriolis/centrifugal + gravity bias (12,); knee rows are zero."""
    h = np.zeros(NA)
    _, h[:NV] = _mass_bias_10(morph, state)
    return h


def input_maps(morph: RobotMorphology, state: FullState) -> dict:
    """B_j, B_t, B_g mapping joint, thruster and ground inputs onto a."""
    chains = _chains(morph, state)
    B_j = np.zeros((NA, 6))
    B_j[6:12, :] = np.eye(6)
    B_t = np.zeros((NA, 6))
    B_g = np.zeros((NA, 6))
    for k, ch in enumerate(chains):
        B_t[:NV, 3 * k:3 * k + 3] = ch.Jv_T.T
        B_g[:NV, 3 * k:3 * k + 3] = ch.Jv_F.T
    return {"B_j": B_j, "B_t": B_t, "B_g": B_g}


def dynamics_matrices(morph: RobotMorphology, state: FullState) -> DynamicsMatrices:
    maps = input_maps(morph, state)
    return DynamicsMatrices(
        M=mass_matrix(morph, state),
        h=bias_vector(morph, state),
        B_j=maps["B_j"],
        B_t=maps["B_t"],
        B_g=maps["B_g"],
    )


def _solve_accel(M10: np.ndarray, rhs10: np.ndarray) -> np.ndarray:
    """Cholesky solve with a condition estimate from the factor."""
    try:
        L = np.linalg.cholesky(M10)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedMassMatrix("mass matrix is not positive definite") from exc
    d = np.diag(L)
    cond_est = (d.max() / d.min()) ** 2
    if cond_est > COND_LIMIT:
        raise IllConditionedMassMatrix(
            f"mass matrix condition estimate {cond_est:.3e} exceeds {COND_LIMIT:.0e}"
        )
    z = np.linalg.solve(L, rhs10)
    return np.linalg.solve(L.T, z)


def thruster_world_forces(morph, state: FullState, u_t: np.ndarray) -> np.ndarray:
    """Per-side thruster forces in the inertial frame.

    With ``thruster_frame = "body"`` the commanded forces ride with the
    torso (they rotate during a control tick); the default interprets
    them as inertial-frame vectors.
    """
    if morph.thruster_frame == "inertial":
        return np.asarray(u_t, dtype=float)
    R = state.R
    return np.concatenate([R @ u_t[0:3], R @ u_t[3:6]])


def accel_from_chains(morph, state, chains, u: ControlInput, u_g: np.ndarray) -> np.ndarray:
    """Generalized accelerations vdot (10,) given precomputed leg chains."""
    M10, h10 = _mass_bias_10(morph, state, chains)
    u_t_world = thruster_world_forces(morph, state, u.u_t)
    rhs = -h10
    rhs[6:10] += u.u_j[0:4]
    for k, ch in enumerate(chains):
        rhs += ch.Jv_T.T @ u_t_world[3 * k:3 * k + 3]
        rhs += ch.Jv_F.T @ u_g[3 * k:3 * k + 3]
    return _solve_accel(M10, rhs)


def forward_dynamics(
    morph: RobotMorphology,
    state: FullState,
    u: ControlInput,
    u_g: Optional[np.ndarray] = None,
) -> np.ndarray:
    """State derivative (30,) for given joint/thruster/ground inputs.

    ``u_g`` stacks the left and right ground reaction forces (6,); omit it
    for flight phases.
    """
    u_g = np.zeros(6) if u_g is None else np.asarray(u_g, dtype=float).reshape(6)
    chains = _chains(morph, state)
    vdot = accel_from_chains(morph, state, chains, u, u_g)

    xdot = np.zeros(NX)
    xdot[SL_R] = (state.R @ so3.skew(state.omega)).reshape(9)
    xdot[SL_Q] = state.x[SL_QDOT]
    xdot[SL_PHI_K] = state.x[SL_DPHI_K]
    xdot[SL_OMEGA] = vdot[0:3]
    xdot[SL_QDOT] = vdot[3:10]
    xdot[SL_DPHI_K] = u.u_j[4:6]
    return xdot


# --- energy and momentum monitors -----------------------------------------
# Computed from the explicit frame velocities, not from the mass matrix, so
# they can serve as an independent check of the Jacobian assembly.

def kinetic_energy(morph: RobotMorphology, state: FullState) -> float:
    from .kinematics import frame_velocities

    pbdot = state.x[21:24]
    omega = state.omega
    ke = 0.5 * morph.m_B * float(pbdot @ pbdot) + 0.5 * float(omega @ morph.I_B @ omega)
    for side in SIDES:
        v = frame_velocities(morph, state, side)
        ke += 0.5 * morph.m_H * float(v.pdot_H @ v.pdot_H)
        ke += 0.5 * float(v.omega_H_local @ morph.I_H @ v.omega_H_local)
        ke += 0.5 * morph.m_K * float(v.pdot_K @ v.pdot_K)
        ke += 0.5 * float(v.omega_K_local @ morph.I_K @ v.omega_K_local)
    return ke


def potential_energy(morph: RobotMorphology, state: FullState) -> float:
    from .kinematics import forward_kinematics

    pe = morph.m_B * morph.g * float(state.p_B[2])
    for side in SIDES:
        g, ph, pk, *_ = state.joints(side)
        fk = forward_kinematics(morph, state.p_B, state.R, (g, ph, pk), side, check=False)
        pe += morph.m_H * morph.g * float(fk.p_H[2])
        pe += morph.m_K * morph.g * float(fk.p_K[2])
    return pe


def total_energy(morph: RobotMorphology, state: FullState) -> float:
    return kinetic_energy(morph, state) + potential_energy(morph, state)


def angular_momentum_about_com(morph: RobotMorphology, state: FullState) -> np.ndarray:
    """Total angular momentum about the instantaneous center of mass."""
    from .kinematics import forward_kinematics, frame_velocities
    from .state import com_position, com_velocity

    p_c = com_position(morph, state)
    v_c = com_velocity(morph, state)
    pbdot = state.x[21:24]
    L = morph.m_B * np.cross(state.p_B - p_c, pbdot - v_c)
    L += state.R @ (morph.I_B @ state.omega)
    for side in SIDES:
        g, ph, pk, *_ = state.joints(side)
        fk = forward_kinematics(morph, state.p_B, state.R, (g, ph, pk), side, check=False)
        vel = frame_velocities(morph, state, side)
        ch = leg_chain(morph, state.R, state.p_B, JointAngles(g, ph, pk), side)
        L += morph.m_H * np.cross(fk.p_H - p_c, vel.pdot_H - v_c)
        L += ch.A1 @ (morph.I_H @ vel.omega_H_local)
        L += morph.m_K * np.cross(fk.p_K - p_c, vel.pdot_K - v_c)
        L += ch.A2 @ (morph.I_K @ vel.omega_K_local)
    return L
