"""Full-order state layout.

The state is a flat 30-vector, ordered as
    [r_B (9, row-major rotation entries),
     q   (7: p_B, gamma_hL, gamma_hR, phi_hL, phi_hR),
     phi_kL, phi_kR,
     omega_B (3, body frame),
     qdot (7),
     phidot_kL, phidot_kR]
Generalized velocities are v = [omega_B; qdot] (10); the acceleration
vector appends the two knee accelerations (12).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import so3
from .morphology import LEFT, RobotMorphology

NX = 30          # full state dimension
NV = 10          # mass-carrying velocity coordinates [omega; qdot]
NA = 12          # accelerations [vdot; knee accels]

# slices into the flat state vector
SL_R = slice(0, 9)
SL_Q = slice(9, 16)
SL_PB = slice(9, 12)
IDX_GAMMA = (12, 13)     # left, right frontal hip
IDX_PHI_H = (14, 15)     # left, right sagittal hip
SL_PHI_K = slice(16, 18)
SL_OMEGA = slice(18, 21)
SL_QDOT = slice(21, 28)
SL_PBDOT = slice(21, 24)
IDX_DGAMMA = (24, 25)
IDX_DPHI_H = (26, 27)
SL_DPHI_K = slice(28, 30)

# velocity-coordinate columns (order of v = [omega; qdot])
V_OMEGA = slice(0, 3)
V_PBDOT = slice(3, 6)
V_DGAMMA = (6, 7)
V_DPHI_H = (8, 9)

STATE_LABELS = (
    ["r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22"]
    + ["pb_x", "pb_y", "pb_z", "gam_L", "gam_R", "phih_L", "phih_R", "phik_L", "phik_R"]
    + ["wx", "wy", "wz", "vb_x", "vb_y", "vb_z", "dgam_L", "dgam_R", "dphih_L", "dphih_R", "dphik_L", "dphik_R"]
)


@dataclass
class FullState:
    """Typed view over the flat state vector."""

    x: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(NX)

    @property
    def R(self) -> np.ndarray:
        return self.x[SL_R].reshape(3, 3)

    @property
    def p_B(self) -> np.ndarray:
        return self.x[SL_PB]

    @property
    def omega(self) -> np.ndarray:
        return self.x[SL_OMEGA]

    @property
    def qdot(self) -> np.ndarray:
        return self.x[SL_QDOT]

    @property
    def v(self) -> np.ndarray:
        """Generalized velocity [omega; qdot] (10,)."""
        return np.concatenate([self.x[SL_OMEGA], self.x[SL_QDOT]])

    def joints(self, side: str):
        """(gamma, phi_h, phi_k, dgamma, dphi_h, dphi_k) for one leg."""
        i = 0 if side == LEFT else 1
        return (
            self.x[IDX_GAMMA[i]],
            self.x[IDX_PHI_H[i]],
            self.x[SL_PHI_K][i],
            self.x[IDX_DGAMMA[i]],
            self.x[IDX_DPHI_H[i]],
            self.x[SL_DPHI_K][i],
        )

    def validate(self, tol: float = 1e-6) -> None:
        if not np.all(np.isfinite(self.x)):
            raise ValueError("state contains non-finite entries")
        so3.check_rotation(self.R, tol)

    def copy(self) -> "FullState":
        return FullState(self.x.copy())


def pack_state(R, p_B, gammas, phi_hs, phi_ks, omega, pbdot, dgammas, dphi_hs, dphi_ks) -> np.ndarray:
    """Assemble the flat state vector from named pieces (left, right order)."""
    x = np.zeros(NX)
    x[SL_R] = np.asarray(R, dtype=float).reshape(9)
    x[SL_PB] = np.asarray(p_B, dtype=float)
    x[IDX_GAMMA[0]], x[IDX_GAMMA[1]] = gammas
    x[IDX_PHI_H[0]], x[IDX_PHI_H[1]] = phi_hs
    x[SL_PHI_K] = phi_ks
    x[SL_OMEGA] = np.asarray(omega, dtype=float)
    x[SL_PBDOT] = np.asarray(pbdot, dtype=float)
    x[IDX_DGAMMA[0]], x[IDX_DGAMMA[1]] = dgammas
    x[IDX_DPHI_H[0]], x[IDX_DPHI_H[1]] = dphi_hs
    x[SL_DPHI_K] = dphi_ks
    return x


def com_position(morph: RobotMorphology, state: "FullState") -> np.ndarray:
    """Total center of mass in the inertial frame."""
    from .kinematics import forward_kinematics  # local import avoids a cycle

    total = morph.m_B * state.p_B
    for side in ("left", "right"):
        g, ph, pk, *_ = state.joints(side)
        fk = forward_kinematics(morph, state.p_B, state.R, (g, ph, pk), side, check=False)
        total = total + morph.m_H * fk.p_H + morph.m_K * fk.p_K
    return total / morph.total_mass


def com_velocity(morph: RobotMorphology, state: "FullState") -> np.ndarray:
    from .kinematics import frame_velocities

    total = morph.m_B * state.x[SL_PBDOT]
    for side in ("left", "right"):
        vel = frame_velocities(morph, state, side)
        total = total + morph.m_H * vel.pdot_H + morph.m_K * vel.pdot_K
    return total / morph.total_mass
