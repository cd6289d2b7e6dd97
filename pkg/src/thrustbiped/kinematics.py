"""Forward kinematics of the leg chains.

Chain per leg: body -> pelvis joint (frontal angle gamma_h) -> hip motor
(sagittal angle phi_h) -> knee motor -> foot, where the lower leg is a
parallel linkage collapsed to its closed-form knee-to-foot vector.  The
thruster rides on the torso.  Everything here is stateless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import so3
from .morphology import LEFT, RobotMorphology
from .state import FullState, V_DGAMMA, V_DPHI_H, NV

_EX = np.array([1.0, 0.0, 0.0])
_EY = np.array([0.0, 1.0, 0.0])

# |phi_k| must stay below pi/2: at the bound the foot comes level with the
# knee and the linkage solution branches.
PHI_K_LIMIT = np.pi / 2


@dataclass(frozen=True)
class JointAngles:
    """One leg's joint angles and rates."""

    gamma_h: float
    phi_h: float
    phi_k: float
    dgamma_h: float = 0.0
    dphi_h: float = 0.0
    dphi_k: float = 0.0

    def __post_init__(self):
        vals = (self.gamma_h, self.phi_h, self.phi_k, self.dgamma_h, self.dphi_h, self.dphi_k)
        if not np.all(np.isfinite(vals)):
            raise ValueError("joint angles/rates must be finite")
        if abs(self.phi_k) >= PHI_K_LIMIT:
            raise ValueError(f"|phi_k| must be < pi/2, got {self.phi_k}")


@dataclass
class FramePositions:
    p_P: np.ndarray
    p_H: np.ndarray
    p_K: np.ndarray
    p_F: np.ndarray
    p_T: np.ndarray


@dataclass
class FrameVelocities:
    omega_H_B: np.ndarray      # hip angular velocity expressed in the body frame
    omega_K_H: np.ndarray      # knee angular velocity expressed in the hip frame
    omega_H_local: np.ndarray  # same vectors in each frame's own axes
    omega_K_local: np.ndarray
    pdot_P: np.ndarray
    pdot_H: np.ndarray
    pdot_K: np.ndarray
    pdot_F: np.ndarray
    pdot_T: np.ndarray


@dataclass
class LegChain:
    """Everything the dynamics assembly needs for one leg at one state."""

    side: str
    A1: np.ndarray       # pelvis/hip frame orientation (world)
    A2: np.ndarray       # thigh/knee frame orientation (world)
    p_P: np.ndarray
    p_H: np.ndarray
    p_K: np.ndarray
    p_F: np.ndarray
    p_T: np.ndarray
    w1: np.ndarray       # hip frame angular velocity, own frame
    w2: np.ndarray       # knee frame angular velocity, own frame
    pdot_P: np.ndarray
    pdot_H: np.ndarray
    pdot_K: np.ndarray
    pdot_F: np.ndarray
    pdot_T: np.ndarray
    w1_vp: np.ndarray    # angular accelerations with vdot = 0
    w2_vp: np.ndarray
    a_H_vp: np.ndarray   # linear accelerations with vdot = 0
    a_K_vp: np.ndarray
    Jv_H: np.ndarray     # 3 x 10 linear-velocity Jacobians wrt [omega; qdot]
    Jv_K: np.ndarray
    Jv_F: np.ndarray
    Jv_T: np.ndarray
    Jw_H: np.ndarray     # 3 x 10 own-frame angular-velocity Jacobians
    Jw_K: np.ndarray


def knee_foot_vector(morph: RobotMorphology, phi_k: float) -> np.ndarray:
    """Knee-to-foot offset in the knee frame (parallel-linkage closed form)."""
    return np.array([-morph.l4a * np.cos(phi_k), 0.0, -(morph.l4b + morph.l4a * np.sin(phi_k))])


def foot_offset_in_hip_frame(morph: RobotMorphology, phi_k: float) -> np.ndarray:
    """R_y(phi_k) @ knee_foot_vector, simplified: the foot in the thigh frame."""
    return np.array([-morph.l4a - morph.l4b * np.sin(phi_k), 0.0, -morph.l4b * np.cos(phi_k)])


def _foot_offset_dphi(morph: RobotMorphology, phi_k: float) -> np.ndarray:
    return np.array([-morph.l4b * np.cos(phi_k), 0.0, morph.l4b * np.sin(phi_k)])


def leg_chain(
    morph: RobotMorphology,
    R_B: np.ndarray,
    p_B: np.ndarray,
    joints: JointAngles,
    side: str,
    omega=None,
    pbdot=None,
) -> LegChain:
    """Positions, velocities, Jacobians and velocity-product accelerations.

    ``omega`` is the body angular velocity in the body frame; ``pbdot`` the
    body linear velocity.  Jacobian columns follow v = [omega(3); pbdot(3);
    dgamma_L; dgamma_R; dphi_hL; dphi_hR].
    """
    omega = np.zeros(3) if omega is None else np.asarray(omega, dtype=float)
    pbdot = np.zeros(3) if pbdot is None else np.asarray(pbdot, dtype=float)
    l1, l2, l3, lt, sg = morph.side_vectors(side)
    i_side = 0 if side == LEFT else 1
    col_g = V_DGAMMA[i_side]
    col_p = V_DPHI_H[i_side]

    g_eff = sg * joints.gamma_h
    dg_eff = sg * joints.dgamma_h
    Rx = so3.rot_x(g_eff)
    Ry = so3.rot_y(joints.phi_h)
    A1 = R_B @ Rx
    A2 = A1 @ Ry

    # own-frame angular velocities and their velocity-product derivatives
    Rx_w = Rx.T @ omega
    w1 = Rx_w + dg_eff * _EX
    w1_vp = -dg_eff * np.cross(_EX, Rx_w)
    Ry_w1 = Ry.T @ w1
    w2 = Ry_w1 + joints.dphi_h * _EY
    w2_vp = Ry.T @ w1_vp - joints.dphi_h * np.cross(_EY, Ry_w1)

    # positions
    p_P = p_B + R_B @ l1
    p_H = p_P + A1 @ l2
    p_K = p_H + A2 @ l3
    u = foot_offset_in_hip_frame(morph, joints.phi_k)
    p_F = p_K + A2 @ u
    p_T = p_B + R_B @ lt

    # velocities
    pdot_P = pbdot + R_B @ np.cross(omega, l1)
    pdot_H = pdot_P + A1 @ np.cross(w1, l2)
    pdot_K = pdot_H + A2 @ np.cross(w2, l3)
    du = _foot_offset_dphi(morph, joints.phi_k)
    pdot_F = pdot_K + A2 @ (np.cross(w2, u) + du * joints.dphi_k)
    pdot_T = pbdot + R_B @ np.cross(omega, lt)

    # linear accelerations with vdot = 0 (massive frames only)
    a_P_vp = R_B @ np.cross(omega, np.cross(omega, l1))
    a_H_vp = a_P_vp + A1 @ (np.cross(w1_vp, l2) + np.cross(w1, np.cross(w1, l2)))
    a_K_vp = a_H_vp + A2 @ (np.cross(w2_vp, l3) + np.cross(w2, np.cross(w2, l3)))

    # Jacobians
    Bl1 = R_B @ so3.skew(l1)
    A1l2 = A1 @ so3.skew(l2)
    A2l3 = A2 @ so3.skew(l3)
    A2u = A2 @ so3.skew(u)
    RxT = Rx.T
    RxRyT = (Rx @ Ry).T
    Ry_ex = Ry.T @ _EX

    Jv_H = np.zeros((3, NV))
    Jv_H[:, 0:3] = -Bl1 - A1l2 @ RxT
    Jv_H[:, 3:6] = np.eye(3)
    Jv_H[:, col_g] = -sg * (A1l2 @ _EX)

    Jv_K = Jv_H.copy()
    Jv_K[:, 0:3] -= A2l3 @ RxRyT
    Jv_K[:, col_g] -= sg * (A2l3 @ Ry_ex)
    Jv_K[:, col_p] = -A2l3 @ _EY

    Jv_F = Jv_K.copy()
    Jv_F[:, 0:3] -= A2u @ RxRyT
    Jv_F[:, col_g] -= sg * (A2u @ Ry_ex)
    Jv_F[:, col_p] -= (A2u @ _EY)

    Jv_T = np.zeros((3, NV))
    Jv_T[:, 0:3] = -R_B @ so3.skew(lt)
    Jv_T[:, 3:6] = np.eye(3)

    Jw_H = np.zeros((3, NV))
    Jw_H[:, 0:3] = RxT
    Jw_H[:, col_g] = sg * _EX

    Jw_K = np.zeros((3, NV))
    Jw_K[:, 0:3] = RxRyT
    Jw_K[:, col_g] = sg * Ry_ex
    Jw_K[:, col_p] = _EY

    return LegChain(
        side=side, A1=A1, A2=A2,
        p_P=p_P, p_H=p_H, p_K=p_K, p_F=p_F, p_T=p_T,
        w1=w1, w2=w2,
        pdot_P=pdot_P, pdot_H=pdot_H, pdot_K=pdot_K, pdot_F=pdot_F, pdot_T=pdot_T,
        w1_vp=w1_vp, w2_vp=w2_vp, a_H_vp=a_H_vp, a_K_vp=a_K_vp,
        Jv_H=Jv_H, Jv_K=Jv_K, Jv_F=Jv_F, Jv_T=Jv_T, Jw_H=Jw_H, Jw_K=Jw_K,
    )


def _joints_from(joints) -> JointAngles:
    if isinstance(joints, JointAngles):
        return joints
    return JointAngles(*joints)


def forward_kinematics(
    morph: RobotMorphology,
    p_B,
    R_B,
    joints,
    side: str,
    check: bool = True,
) -> FramePositions:
    """Pelvis, hip, knee, foot and thruster positions in the inertial frame.

    ``joints`` may be a JointAngles or a (gamma_h, phi_h, phi_k) triple.
    Rejects a non-orthonormal R_B (tolerance 1e-6) unless ``check=False``.
    """
    R_B = np.asarray(R_B, dtype=float)
    if check:
        so3.check_rotation(R_B, 1e-6)
    ch = leg_chain(morph, R_B, np.asarray(p_B, dtype=float), _joints_from(joints), side)
    return FramePositions(p_P=ch.p_P, p_H=ch.p_H, p_K=ch.p_K, p_F=ch.p_F, p_T=ch.p_T)


def frame_velocities(morph: RobotMorphology, state: FullState, side: str) -> FrameVelocities:
    """Angular and linear velocities of one leg's frames at a state."""
    g, ph, pk, dg, dph, dpk = state.joints(side)
    _, _, _, _, sg = morph.side_vectors(side)
    ja = JointAngles(g, ph, pk, dg, dph, dpk)
    ch = leg_chain(morph, state.R, state.p_B, ja, side, omega=state.omega, pbdot=state.x[21:24])
    omega_H_B = state.omega + sg * dg * _EX
    omega_K_H = ch.w1 + dph * _EY      # hip-frame expression: w2 before the R_y(phi_h) transport
    return FrameVelocities(
        omega_H_B=omega_H_B,
        omega_K_H=omega_K_H,
        omega_H_local=ch.w1,
        omega_K_local=ch.w2,
        pdot_P=ch.pdot_P,
        pdot_H=ch.pdot_H,
        pdot_K=ch.pdot_K,
        pdot_F=ch.pdot_F,
        pdot_T=ch.pdot_T,
    )


def position_jacobian(morph: RobotMorphology, state: FullState, point: str, side: str) -> np.ndarray:
    """3x10 Jacobian of a point's velocity wrt v = [omega; qdot].

    ``point`` is ``"foot"`` or ``"thruster"``.  The knee rate columns are
    deliberately absent: v does not include them.
    """
    g, ph, pk, dg, dph, dpk = state.joints(side)
    ja = JointAngles(g, ph, pk, dg, dph, dpk)
    ch = leg_chain(morph, state.R, state.p_B, ja, side, omega=state.omega, pbdot=state.x[21:24])
    if point == "foot":
        return ch.Jv_F
    if point == "thruster":
        return ch.Jv_T
    raise ValueError(f"point must be 'foot' or 'thruster', got {point!r}")
