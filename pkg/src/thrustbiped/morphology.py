"""Robot build constants: link offsets, masses, inertias, thruster mounts.

All offset vectors are stored for the LEFT side; the right side mirrors
the y components and flips the sign convention of the frontal hip angle,
so equal joint values on both sides produce a pose that is symmetric
about the sagittal plane.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

LEFT = "left"
RIGHT = "right"
SIDES = (LEFT, RIGHT)

_MIRROR_Y = np.diag([1.0, -1.0, 1.0])


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError("offset vector must be finite")
    return a


def _inertia(I) -> np.ndarray:
    a = np.asarray(I, dtype=float).reshape(3, 3)
    if np.linalg.norm(a - a.T) > 1e-12:
        raise ValueError("inertia matrix must be symmetric")
    if np.any(np.linalg.eigvalsh(a) <= 0.0):
        raise ValueError("inertia matrix must be positive definite")
    return a


@dataclass(frozen=True)
class RobotMorphology:
    """Geometric and inertial constants of the biped.

    ``l1_B``  body origin -> pelvis joint, body frame [m]
    ``l2_P``  pelvis joint -> hip motor, pelvis frame [m]
    ``l3_H``  hip motor -> knee motor, hip frame [m]
    ``l4a/l4b`` lower-leg linkage constants [m]; the knee-to-foot vector in
        the knee frame is [-l4a cos(phi_k), 0, -(l4b + l4a sin(phi_k))]
    ``lt_B``  body origin -> thruster, body frame [m]
    masses in kg, inertias about each part's own frame in kg m^2.
    """

    l1_B: np.ndarray
    l2_P: np.ndarray
    l3_H: np.ndarray
    l4a: float
    l4b: float
    lt_B: np.ndarray
    m_B: float
    m_H: float
    m_K: float
    I_B: np.ndarray
    I_H: np.ndarray
    I_K: np.ndarray
    g: float = 9.81
    thruster_frame: str = "inertial"   # "body" locks the force to the torso

    def __post_init__(self):
        object.__setattr__(self, "l1_B", _vec3(self.l1_B))
        object.__setattr__(self, "l2_P", _vec3(self.l2_P))
        object.__setattr__(self, "l3_H", _vec3(self.l3_H))
        object.__setattr__(self, "lt_B", _vec3(self.lt_B))
        object.__setattr__(self, "I_B", _inertia(self.I_B))
        object.__setattr__(self, "I_H", _inertia(self.I_H))
        object.__setattr__(self, "I_K", _inertia(self.I_K))
        for name in ("m_B", "m_H", "m_K"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.l4a <= 0.0 or self.l4b <= 0.0:
            raise ValueError("l4a and l4b must be positive")
        if self.g < 0.0:
            raise ValueError("g must be non-negative")
        if self.thruster_frame not in ("inertial", "body"):
            raise ValueError("thruster_frame must be 'inertial' or 'body'")

    @property
    def total_mass(self) -> float:
        return self.m_B + 2.0 * (self.m_H + self.m_K)

    def side_vectors(self, side: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, float]:
        """(l1, l2, l3, lt, gamma_sign) for one leg.

        The right side mirrors the y components of every offset and uses
        the opposite sign for the frontal hip rotation, which makes equal
        joint angles mirror-symmetric poses.
        """
        if side == LEFT:
            return self.l1_B, self.l2_P, self.l3_H, self.lt_B, 1.0
        if side == RIGHT:
            return (
                _MIRROR_Y @ self.l1_B,
                _MIRROR_Y @ self.l2_P,
                _MIRROR_Y @ self.l3_H,
                _MIRROR_Y @ self.lt_B,
                -1.0,
            )
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")

    @property
    def max_leg_extent(self) -> float:
        """Largest hip-to-foot distance the linkage can reach."""
        return float(np.linalg.norm(self.l3_H) + np.hypot(self.l4a, 0.0) + self.l4b)


def default_morphology() -> RobotMorphology:
    """Shipped default build (implementation defaults, ~5 kg platform)."""
    return RobotMorphology(
        l1_B=(0.0, 0.06, -0.03),
        l2_P=(0.0, 0.055, -0.04),
        l3_H=(0.0, 0.0, -0.22),
        l4a=0.03,
        l4b=0.25,
        lt_B=(0.0, 0.12, 0.18),
        m_B=3.0,
        m_H=0.6,
        m_K=0.4,
        I_B=np.diag([0.040, 0.030, 0.020]),
        I_H=np.diag([5e-4, 5e-4, 3e-4]),
        I_K=np.diag([4e-4, 4e-4, 2e-4]),
        g=9.81,
    )
