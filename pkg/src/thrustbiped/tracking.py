"""Map reduced-order plans onto the full-order robot.

Pieces: closed-form leg inverse kinematics (the linkage admits an exact
solution), joint-space PD tracking with stance gravity feedforward, a
stance leg-length servo that holds the CoM height, and a thruster
allocator.  The allocator preserves the commanded force resultant
exactly: roll/yaw torques come from the thruster differential (the only
torques two laterally mounted fans can produce at fixed total force) and
the pitch residual is delegated to the stance hip.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from . import so3
from .contact import GroundParams
from .dynamics import ControlInput
from .gait import GaitConfig, SchedulerOutput
from .kinematics import PHI_K_LIMIT, JointAngles, leg_chain
from .morphology import LEFT, RIGHT, SIDES, RobotMorphology
from .planner import CapturePlan
from .state import (
    IDX_DGAMMA,
    IDX_DPHI_H,
    IDX_GAMMA,
    IDX_PHI_H,
    SL_DPHI_K,
    SL_PHI_K,
    FullState,
)
from .swing import swing_trajectory

_PHI_K_MARGIN = 0.05


@dataclass
class LegTargets:
    gamma_h: float
    phi_h: float
    phi_k: float
    clamped: bool


def com_from_chains(morph: RobotMorphology, state: FullState, chains) -> Tuple[np.ndarray, np.ndarray]:
    """Total CoM position and velocity from precomputed leg chains."""
    p = morph.m_B * state.p_B
    v = morph.m_B * state.x[21:24]
    for ch in chains.values():
        p = p + morph.m_H * ch.p_H + morph.m_K * ch.p_K
        v = v + morph.m_H * ch.pdot_H + morph.m_K * ch.pdot_K
    return p / morph.total_mass, v / morph.total_mass


def leg_ik(
    morph: RobotMorphology,
    R_B: np.ndarray,
    p_B: np.ndarray,
    p_F_target: np.ndarray,
    side: str,
) -> LegTargets:
    """Closed-form joint angles placing the foot at ``p_F_target``.

    Out-of-workspace targets are clamped to the nearest boundary solution
    and flagged.  The knee branch with |phi_k| < pi/2 is selected (foot
    below the knee).
    """
    l1, l2, l3, lt, sg = morph.side_vectors(side)
    b = np.asarray(R_B, dtype=float).T @ (np.asarray(p_F_target, dtype=float) - np.asarray(p_B, dtype=float)) - l1
    clamped = False

    # frontal angle: rotate b about x until its y component matches the
    # fixed lateral offset of the chain
    y_bar = l2[1] + l3[1]
    rho = float(np.hypot(b[1], b[2]))
    beta = float(np.arctan2(b[2], b[1]))
    ratio = y_bar / rho if rho > 0.0 else 1.1
    if abs(ratio) > 1.0:
        ratio = np.clip(ratio, -1.0, 1.0)
        clamped = True
    alpha = float(np.arccos(ratio))
    candidates = [beta + alpha, beta - alpha]
    # prefer the solution that keeps the foot below the pelvis (c_z < 0)
    # and, among valid ones, the smaller frontal excursion
    def _wrap(a):
        return float((a + np.pi) % (2.0 * np.pi) - np.pi)

    best = None
    for g_eff in (_wrap(c) for c in candidates):
        c_z = -np.sin(g_eff) * b[1] + np.cos(g_eff) * b[2]
        key = (0 if c_z < 0.0 else 1, abs(g_eff))
        if best is None or key < best[0]:
            best = (key, g_eff)
    g_eff = best[1]

    xi = b[0] - l2[0]
    zeta = -np.sin(g_eff) * b[1] + np.cos(g_eff) * b[2] - l2[2]

    # knee angle from the leg-plane distance
    A = l3[0] - morph.l4a
    Bc = l3[2]
    R = float(np.hypot(A, Bc))
    delta = float(np.arctan2(Bc, A))
    kappa = (A * A + Bc * Bc + morph.l4b**2 - (xi * xi + zeta * zeta)) / (2.0 * morph.l4b)
    ratio = kappa / R
    if abs(ratio) > 1.0:
        ratio = np.clip(ratio, -1.0, 1.0)
        clamped = True
    asn = float(np.arcsin(ratio))
    phi_k = None
    for cand in (_wrap(asn - delta), _wrap(np.pi - asn - delta)):
        if abs(cand) < PHI_K_LIMIT:
            if phi_k is None or abs(cand) < abs(phi_k):
                phi_k = cand
    if phi_k is None:
        phi_k = float(np.clip(_wrap(asn - delta), -(PHI_K_LIMIT - _PHI_K_MARGIN),
                              PHI_K_LIMIT - _PHI_K_MARGIN))
        clamped = True

    # hip sagittal angle from the in-plane components
    m_x = A - morph.l4b * np.sin(phi_k)
    m_z = Bc - morph.l4b * np.cos(phi_k)
    phi_h = float(np.arctan2(xi * m_z - zeta * m_x, xi * m_x + zeta * m_z))

    return LegTargets(gamma_h=sg * g_eff, phi_h=phi_h, phi_k=phi_k, clamped=clamped)


@dataclass(frozen=True)
class TrackerGains:
    """Joint, attitude and height-servo gains (implementation defaults)."""

    kp_hip: float = 80.0      # hip/pelvis torque PD [N m/rad]
    kd_hip: float = 8.0
    kp_knee: float = 900.0    # knee acceleration PD [1/s^2]
    kd_knee: float = 60.0
    kp_att: float = 60.0      # attitude PD [N m/rad]
    kd_att: float = 10.0
    kp_len: float = 0.8       # stance length servo [m per m of CoM height error]
    kd_len: float = 0.25
    kp_bal: float = 250.0     # standing balance thrust [N per m of CoM offset]
    kd_bal: float = 90.0      # [N s/m]
    max_bal_force: float = 15.0
    gravity_ff: bool = True
    touchdown_press: float = 0.004   # swing goal below ground at landing [m]
    z_slew: float = 0.25             # stance height-target rate limit [m/s]
    max_torque: float = 60.0  # per-joint clamp [N m]
    max_thrust: float = 40.0  # per-thruster clamp [N]


@dataclass
class ThrustAllocation:
    f_L: np.ndarray
    f_R: np.ndarray
    torque_desired: np.ndarray     # attitude PD request
    torque_realized: np.ndarray    # thruster torque about the CoM
    hip_pitch_assist: float        # residual delegated to the stance hip


def allocate_thrusters(
    u_tc: np.ndarray,
    tau_des: np.ndarray,
    r_L: np.ndarray,
    r_R: np.ndarray,
) -> ThrustAllocation:
    """Split a CoM force command across two thrusters, adding what torque
    the pair can produce without disturbing the force resultant.

    f_L + f_R == u_tc holds exactly.  With mounts separated along a single
    axis, differential thrust spans only torques perpendicular to that
    axis; the parallel (pitch) component is returned for the hips.
    """
    u_tc = np.asarray(u_tc, dtype=float)
    tau_des = np.asarray(tau_des, dtype=float)
    a = np.asarray(r_L, dtype=float) - np.asarray(r_R, dtype=float)
    mid = 0.5 * (np.asarray(r_L, dtype=float) + np.asarray(r_R, dtype=float))
    tau_resid = tau_des - np.cross(mid, u_tc)
    a2 = float(a @ a)
    if a2 < 1e-12:
        delta = np.zeros(3)
        along = 0.0
        a_hat = np.zeros(3)
    else:
        a_hat = a / np.sqrt(a2)
        along = float(tau_resid @ a_hat)
        delta = np.cross(tau_resid, a) / a2
    f_L = 0.5 * u_tc + delta
    f_R = 0.5 * u_tc - delta
    realized = np.cross(r_L, f_L) + np.cross(r_R, f_R)
    return ThrustAllocation(
        f_L=f_L, f_R=f_R,
        torque_desired=tau_des,
        torque_realized=realized,
        hip_pitch_assist=along,
    )


@dataclass
class TrackerDebug:
    swing_target: np.ndarray
    stance_targets: Dict[str, np.ndarray]
    ik_clamped: bool
    allocation: Optional[ThrustAllocation]
    knee_load_torque: Dict[str, float]


class WholeBodyTracker:
    """Joint-level controller following a capture plan on the full model."""

    def __init__(self, morph: RobotMorphology, gait: GaitConfig,
                 gains: TrackerGains = TrackerGains(),
                 ground: GroundParams = GroundParams(),
                 control_period: float = 1e-3):
        self.morph = morph
        self.gait = gait
        self.gains = gains
        self.ground = ground
        self.control_period = control_period
        self._z_cmd = {}          # slew-limited stance height target per side
        self._swing_prev = None   # (side, LegTargets) for swing rate feedforward

    def _leg_pd(self, state: FullState, side: str, targets: LegTargets,
                ff_gamma: float = 0.0, ff_phi: float = 0.0, rates=(0.0, 0.0, 0.0)):
        g = self.gains
        i = 0 if side == LEFT else 1
        gamma = state.x[IDX_GAMMA[i]]
        phi_h = state.x[IDX_PHI_H[i]]
        phi_k = state.x[SL_PHI_K][i]
        dgamma = state.x[IDX_DGAMMA[i]]
        dphi_h = state.x[IDX_DPHI_H[i]]
        dphi_k = state.x[SL_DPHI_K][i]
        u_P = g.kp_hip * (targets.gamma_h - gamma) - g.kd_hip * (dgamma - rates[0]) + ff_gamma
        u_H = g.kp_hip * (targets.phi_h - phi_h) - g.kd_hip * (dphi_h - rates[1]) + ff_phi
        u_k = g.kp_knee * (targets.phi_k - phi_k) - g.kd_knee * (dphi_k - rates[2])
        lim = g.max_torque
        return float(np.clip(u_P, -lim, lim)), float(np.clip(u_H, -lim, lim)), float(u_k)

    def compute(
        self,
        state: FullState,
        sched: SchedulerOutput,
        plan: Optional[CapturePlan],
        liftoff: Optional[np.ndarray],
        anchors: Dict[str, np.ndarray],
        u_g: Optional[np.ndarray] = None,
    ) -> Tuple[ControlInput, TrackerDebug]:
        """Control input for one tick.

        ``anchors`` maps stance side(s) to their ground anchor points;
        ``liftoff`` is the swing foot position at the last step event
        (None while standing).  ``u_g`` (if supplied) is only used for the
        knee load-torque diagnostic.
        """
        morph, gait, gains = self.morph, self.gait, self.gains
        R, p_B = state.R, state.p_B
        standing = not sched.stepping or liftoff is None

        # attitude PD (world frame), realized by thruster differential
        tau_des = -gains.kp_att * so3.rotation_log(R) - gains.kd_att * (R @ state.omega)

        thrust_cmd = (plan.thrust.u_tc if plan is not None else np.zeros(3)).copy()
        chains = {
            side: leg_chain(morph, R, p_B, JointAngles(*state.joints(side)), side,
                            omega=state.omega, pbdot=state.x[21:24])
            for side in SIDES
        }
        com, vcom = com_from_chains(morph, state, chains)

        # standing balance: point feet on a line give no CoP authority, so a
        # horizontal thrust component holds the CoM over the support point;
        # while stepping, the thrust stays vertical and foot placement does
        # this job
        if (not sched.stepping or liftoff is None) and anchors:
            mid = np.mean([anchors[s_][:2] for s_ in anchors.keys()], axis=0)
            f_bal = -gains.kp_bal * (com[:2] - mid) - gains.kd_bal * vcom[:2]
            n = float(np.linalg.norm(f_bal))
            if n > gains.max_bal_force:
                f_bal *= gains.max_bal_force / n
            thrust_cmd[0] += f_bal[0]
            thrust_cmd[1] += f_bal[1]
        alloc = allocate_thrusters(
            thrust_cmd, tau_des,
            chains[LEFT].p_T - com, chains[RIGHT].p_T - com,
        )
        f_L = np.clip(alloc.f_L, -gains.max_thrust, gains.max_thrust)
        f_R = np.clip(alloc.f_R, -gains.max_thrust, gains.max_thrust)

        # stance length servo: raise the foot target to drop the CoM; the
        # static penetration the load requires is fed forward so the servo
        # does not fight the ground spring (commanding feet at the surface
        # would perpetually unload them and pump a bounce)
        z_err = float(com[2] - gait.z0)
        z_off = gains.kp_len * z_err + gains.kd_len * float(vcom[2])

        stance_sides = list(anchors.keys()) if standing else [sched.stance]
        share = 1.0 / max(1, len(stance_sides))
        support = morph.total_mass * morph.g - float(thrust_cmd[2])

        u_j = np.zeros(6)
        ik_clamped = False
        stance_targets = {}
        pen_ff = share * support / self.ground.k_gp
        # stance IK is solved against the LEVEL torso attitude: a torso tilt
        # then shows up as joint error, so the leg position loops double as
        # the pitch/roll servo (solving against the current R would decouple
        # torso attitude from the legs entirely)
        R_level = np.eye(3)
        slew = gains.z_slew * self.control_period
        for side in list(self._z_cmd.keys()):
            if side not in stance_sides:
                del self._z_cmd[side]
        for side in stance_sides:
            anchor = anchors[side]
            z_des = z_off - pen_ff
            # a fresh stance leg ramps its height target in instead of
            # yanking the foot into the ground and bouncing the body
            z_prev = self._z_cmd.get(side, 0.0)
            z_cmd = float(np.clip(z_des, z_prev - slew, z_prev + slew))
            self._z_cmd[side] = z_cmd
            target = np.array([anchor[0], anchor[1], z_cmd])
            stance_targets[side] = target
            ik = leg_ik(morph, R_level, p_B, target, side)
            ik_clamped |= ik.clamped
            ff_g = ff_p = 0.0
            if gains.gravity_ff:
                i = 0 if side == LEFT else 1
                Jv_F = chains[side].Jv_F
                f_sup = np.array([0.0, 0.0, share * support])
                ff_g = -float(Jv_F[:, 6 + i] @ f_sup)
                ff_p = -float(Jv_F[:, 8 + i] @ f_sup)
            # the stance hip takes the pitch torque the thrusters cannot make
            ff_p += -share * alloc.hip_pitch_assist
            u_P, u_H, u_k = self._leg_pd(state, side, ik, ff_g, ff_p)
            i = 0 if side == LEFT else 1
            u_j[0 + i], u_j[2 + i], u_j[4 + i] = u_P, u_H, u_k

        swing_target = np.zeros(3)
        if not standing:
            side = sched.swing
            goal = plan.target - np.array([0.0, 0.0, gains.touchdown_press])
            pos, _ = swing_trajectory(sched.phase, liftoff, goal, gait.swing_apex)
            swing_target = pos
            ik = leg_ik(morph, R, p_B, pos, side)
            ik_clamped |= ik.clamped
            # joint rate feedforward from consecutive swing targets: the
            # reference moves (phase + replanning), and lag at touchdown
            # turns into foot skid
            rates = (0.0, 0.0, 0.0)
            if self._swing_prev is not None and self._swing_prev[0] == side:
                prev = self._swing_prev[1]
                dt = self.control_period
                rates = ((ik.gamma_h - prev.gamma_h) / dt,
                         (ik.phi_h - prev.phi_h) / dt,
                         (ik.phi_k - prev.phi_k) / dt)
            self._swing_prev = (side, ik)
            u_P, u_H, u_k = self._leg_pd(state, side, ik, rates=rates)
            i = 0 if side == LEFT else 1
            u_j[0 + i], u_j[2 + i], u_j[4 + i] = u_P, u_H, u_k
        else:
            self._swing_prev = None

        # knee load torque: moment the knee actuator carries against the GRF
        knee_load = {}
        for k, side in enumerate(SIDES):
            if u_g is None:
                knee_load[side] = 0.0
            else:
                ch = chains[side]
                from .kinematics import _foot_offset_dphi

                arm = ch.A2 @ _foot_offset_dphi(morph, state.x[SL_PHI_K][k])
                knee_load[side] = -float(arm @ u_g[3 * k:3 * k + 3])

        u = ControlInput(u_j=u_j, u_t=np.concatenate([f_L, f_R]))
        debug = TrackerDebug(
            swing_target=swing_target,
            stance_targets=stance_targets,
            ik_clamped=ik_clamped,
            allocation=alloc,
            knee_load_torque=knee_load,
        )
        return u, debug
