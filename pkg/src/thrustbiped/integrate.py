"""Fixed-step time integration.

Two steppers: a classical RK4 for flat state vectors, and a Munthe-Kaas
RK4 for states that carry a rotation matrix block (the rotation advances
through the exponential map, everything else through standard RK4 stages).
Fixed steps keep every run deterministic and replayable.
"""

from __future__ import annotations

from typing import Callable, Tuple

import numpy as np

from .so3 import dexpinv, orthonormalize, so3_exp


class NonFiniteDerivativeError(RuntimeError):
    """A derivative evaluation returned NaN/Inf: the dynamics blew up."""


def _check_finite(v, where: str):
    if not np.all(np.isfinite(v)):
        raise NonFiniteDerivativeError(f"non-finite derivative at {where}")
    return v


def rk4_step(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, dt: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step of xdot = f(x)."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    k1 = _check_finite(np.asarray(f(x), dtype=float), "stage 1")
    k2 = _check_finite(np.asarray(f(x + 0.5 * dt * k1), dtype=float), "stage 2")
    k3 = _check_finite(np.asarray(f(x + 0.5 * dt * k2), dtype=float), "stage 3")
    k4 = _check_finite(np.asarray(f(x + dt * k3), dtype=float), "stage 4")
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def so3_rk4_step(
    f: Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]],
    R: np.ndarray,
    y: np.ndarray,
    dt: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """One Munthe-Kaas RK4 step of the pair Rdot = R [omega]_x, ydot = g(R, y).

    ``f(R, y)`` must return ``(omega, ydot)`` with omega the body angular
    velocity of the rotation block.  The rotation increment is integrated
    in exponential coordinates (dexpinv-corrected stages), so the result
    stays on the rotation group to round-off before the final polish.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    y = np.asarray(y, dtype=float)

    o1, k1 = f(R, y)
    _check_finite(o1, "stage 1"), _check_finite(k1, "stage 1")
    a1 = np.asarray(o1, dtype=float)

    s2 = 0.5 * dt * a1
    o2, k2 = f(R @ so3_exp(s2), y + 0.5 * dt * np.asarray(k1))
    _check_finite(o2, "stage 2"), _check_finite(k2, "stage 2")
    a2 = dexpinv(s2, o2)

    s3 = 0.5 * dt * a2
    o3, k3 = f(R @ so3_exp(s3), y + 0.5 * dt * np.asarray(k2))
    _check_finite(o3, "stage 3"), _check_finite(k3, "stage 3")
    a3 = dexpinv(s3, o3)

    s4 = dt * a3
    o4, k4 = f(R @ so3_exp(s4), y + dt * np.asarray(k3))
    _check_finite(o4, "stage 4"), _check_finite(k4, "stage 4")
    a4 = dexpinv(s4, o4)

    sigma = (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    y_next = y + (dt / 6.0) * (
        np.asarray(k1) + 2.0 * np.asarray(k2) + 2.0 * np.asarray(k3) + np.asarray(k4)
    )
    return orthonormalize(R @ so3_exp(sigma)), y_next
