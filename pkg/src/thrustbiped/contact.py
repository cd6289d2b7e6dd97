"""Compliant ground model with undamped rebound and Stribeck friction.

The ground is the plane z = 0.  Normal force is a one-sided spring-damper
whose damping switches off while the foot is separating (undamped rebound).
Tangential force follows the Stribeck law per axis, with sgn(0) = 0: true
stiction is approximated, which is acceptable because stance feet sit near
zero slip velocity where the static term dominates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GroundParams:
    """Ground spring/damper and friction constants (implementation defaults)."""

    k_gp: float = 8000.0   # normal spring [N/m]
    k_gd: float = 300.0    # normal damper [N s/m]
    mu_c: float = 0.7      # Coulomb friction coefficient
    mu_s: float = 0.9      # static friction coefficient
    mu_v: float = 0.1      # viscous friction [N s/m]
    v_s: float = 0.01      # Stribeck velocity [m/s]

    def __post_init__(self):
        if self.k_gp <= 0.0:
            raise ValueError("k_gp must be positive")
        if self.k_gd < 0.0:
            raise ValueError("k_gd must be non-negative")
        if not (self.mu_s >= self.mu_c >= 0.0):
            raise ValueError("need mu_s >= mu_c >= 0")
        if self.mu_v < 0.0:
            raise ValueError("mu_v must be non-negative")
        if self.v_s <= 0.0:
            raise ValueError("v_s must be positive")


@dataclass
class ContactForce:
    """Per-foot ground reaction force and contact bookkeeping."""

    force: np.ndarray      # (3,) inertial frame [N]
    in_contact: bool
    penetration: float     # depth below ground [m], >= 0


def normal_force(params: GroundParams, p_z: float, v_z: float) -> float:
    """Ground normal force for foot height p_z and vertical velocity v_z.

    Zero above ground; damping is dropped while rebounding (v_z > 0); the
    result is clamped at zero so the ground never pulls.
    """
    if p_z >= 0.0:
        return 0.0
    k_gd = 0.0 if v_z > 0.0 else params.k_gd
    return max(0.0, -params.k_gp * p_z - k_gd * v_z)


def friction_force(params: GroundParams, v_tan, f_z: float) -> np.ndarray:
    """Tangential (x, y) friction under normal load f_z, per-axis Stribeck.

    Each axis sees -(mu_c + (mu_s - mu_c) exp(-v^2/v_s^2)) f_z sgn(v)
    minus the viscous term mu_v v.  sgn(0) = 0.
    """
    if f_z < 0.0:
        raise ValueError("normal load must be non-negative")
    v = np.asarray(v_tan, dtype=float).reshape(2)
    mu = params.mu_c + (params.mu_s - params.mu_c) * np.exp(-(v * v) / params.v_s**2)
    return -mu * f_z * np.sign(v) - params.mu_v * v


def foot_contact(params: GroundParams, p_F, pdot_F) -> ContactForce:
    """Contact force for one foot from its position and velocity."""
    p_F = np.asarray(p_F, dtype=float)
    pdot_F = np.asarray(pdot_F, dtype=float)
    if p_F[2] >= 0.0:
        return ContactForce(force=np.zeros(3), in_contact=False, penetration=0.0)
    f_z = normal_force(params, p_F[2], pdot_F[2])
    f_xy = friction_force(params, pdot_F[0:2], f_z)
    return ContactForce(
        force=np.array([f_xy[0], f_xy[1], f_z]),
        in_contact=True,
        penetration=-p_F[2],
    )


def ground_forces(params: GroundParams, p_F_L, pdot_F_L, p_F_R, pdot_F_R):
    """Stacked (left, right) ground forces gated on penetration.

    Returns (u_g (6,), ContactForce left, ContactForce right).
    """
    left = foot_contact(params, p_F_L, pdot_F_L)
    right = foot_contact(params, p_F_R, pdot_F_R)
    return np.concatenate([left.force, right.force]), left, right
