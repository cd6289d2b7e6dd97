"""Swing-foot reference trajectory.

Smoothstep interpolation from liftoff to target with a clearance bump:
C1, zero endpoint velocities (soft touchdown), apex at mid-swing.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np


def swing_trajectory(phase: float, liftoff, target, apex: float) -> Tuple[np.ndarray, np.ndarray]:
    """Foot reference position and its derivative with respect to phase.

    ``phase`` runs 0 (liftoff) to 1 (touchdown).  Divide the returned
    derivative by the swing duration to get a velocity reference.
    """
    if not 0.0 <= phase <= 1.0:
        raise ValueError("phase must lie in [0, 1]")
    p0 = np.asarray(liftoff, dtype=float)
    p1 = np.asarray(target, dtype=float)
    s = phase * phase * (3.0 - 2.0 * phase)
    ds = 6.0 * phase * (1.0 - phase)
    pos = p0 + s * (p1 - p0)
    dpos = ds * (p1 - p0)
    bump = np.sin(np.pi * phase)
    pos[2] += apex * bump * bump
    dpos[2] += apex * np.pi * np.sin(2.0 * np.pi * phase)
    return pos, dpos
