"""Rotation primitives shared by all dynamics code.

Conventions: rotation matrices map body-frame vectors into the inertial
frame (x = R x^B); angular velocities are expressed in the frame they
belong to unless noted otherwise.
"""

from __future__ import annotations

import numpy as np

# Frobenius defect allowed on R^T R - I after construction / renormalization.
ORTHONORMALITY_TOL = 1e-9


def rot_x(angle: float) -> np.ndarray:
    """Right-handed elementary rotation about the x axis."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    """Right-handed elementary rotation about the y axis."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def skew(w) -> np.ndarray:
    """Matrix [w]_x such that [w]_x v = w x v for every v."""
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def so3_exp(sigma) -> np.ndarray:
    """exp([sigma]_x) by the Rodrigues formula.

    The sin(t)/t and (1-cos(t))/t^2 coefficients switch to their series
    below t = 1e-4 so the map stays exact to round-off near zero.
    """
    sigma = np.asarray(sigma, dtype=float)
    t2 = float(sigma @ sigma)
    t = np.sqrt(t2)
    if t < 1e-4:
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0
    else:
        a = np.sin(t) / t
        b = (1.0 - np.cos(t)) / t2
    k = skew(sigma)
    return np.eye(3) + a * k + b * (k @ k)


def orthonormalize(R) -> np.ndarray:
    """Nearest rotation matrix (polar factor, computed via SVD)."""
    u, _, vt = np.linalg.svd(np.asarray(R, dtype=float))
    q = u @ vt
    if np.linalg.det(q) < 0.0:
        u[:, -1] = -u[:, -1]
        q = u @ vt
    return q


def rotation_defect(R) -> float:
    """Frobenius norm of R^T R - I."""
    R = np.asarray(R, dtype=float)
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


def check_rotation(R, tol: float = 1e-6) -> None:
    """Raise ValueError if R is not orthonormal with unit determinant."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {R.shape}")
    defect = rotation_defect(R)
    if defect > tol:
        raise ValueError(f"matrix is not orthonormal (defect {defect:.3e})")
    if abs(np.linalg.det(R) - 1.0) > tol:
        raise ValueError("matrix has determinant != +1")


def integrate_rotation(R, w_body, dt: float) -> np.ndarray:
    """Advance Rdot = R [w]_x over dt with w held constant.

    Exact for constant body rate (exponential map), then renormalized so
    long runs cannot drift off the rotation group.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    w_body = np.asarray(w_body, dtype=float)
    return orthonormalize(np.asarray(R, dtype=float) @ so3_exp(w_body * dt))


def dexpinv(sigma, w) -> np.ndarray:
    """Exponential-coordinate rate matching a body-frame angular velocity.

    For the right-trivialized update R(t) = R0 exp([sigma]_x) driven by
    Rdot = R [w]_x, sigma evolves as w + sigma x w / 2 + sigma x (sigma x
    w) / 12 + O(|sigma|^4) -- truncation far below round-off for the
    per-step increments a fixed-step integrator produces.
    """
    sigma = np.asarray(sigma, dtype=float)
    w = np.asarray(w, dtype=float)
    c1 = np.cross(sigma, w)
    return w + 0.5 * c1 + np.cross(sigma, c1) / 12.0


def rotation_log(R) -> np.ndarray:
    """Rotation vector of R (principal branch)."""
    R = np.asarray(R, dtype=float)
    cos_t = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    t = np.arccos(cos_t)
    v = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if t < 1e-7:
        return v  # sin(t)/t ~ 1
    if np.pi - t < 1e-5:
        # near pi the antisymmetric part vanishes; recover axis from R + I
        a = np.diag(R) + 1.0
        axis = np.sqrt(np.maximum(a, 0.0) / 2.0)
        axis *= np.sign(np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) + 1e-300)
        n = np.linalg.norm(axis)
        return t * axis / n if n > 0 else np.zeros(3)
    return t / np.sin(t) * v
