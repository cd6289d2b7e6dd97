"""Stepping backend selection.

The hot loop (full-order dynamics + contact, RK4 substeps) dominates the
runtime of every full-order scenario, so it exists twice: a compiled
kernel (``thrustbiped._core``, built from Cython) and a pure-Python
reference in ``_engine_py``.  The compiled kernel is used when it
imported successfully and the THRUSTBIPED_PURE environment variable is
unset; both produce the same trajectories to round-off, which is pinned
by the equivalence tests.
"""

from __future__ import annotations

import os

import numpy as np

from . import _engine_py
from .contact import GroundParams
from .dynamics import IllConditionedMassMatrix
from .integrate import NonFiniteDerivativeError
from .morphology import RobotMorphology

try:  # pragma: no cover - exercised only when the extension is built
    from . import _core
except ImportError:  # pragma: no cover
    _core = None


def compiled_available() -> bool:
    return _core is not None


def active_backend() -> str:
    """"compiled" or "python", honoring the THRUSTBIPED_PURE override."""
    if _core is None or os.environ.get("THRUSTBIPED_PURE"):
        return "python"
    return "compiled"


def pack_morphology(morph: RobotMorphology) -> np.ndarray:
    """Flatten the morphology constants for the compiled kernel."""
    left = morph.side_vectors("left")
    right = morph.side_vectors("right")
    parts = []
    for vecs in (left, right):
        l1, l2, l3, lt, sg = vecs
        parts.extend([l1, l2, l3, lt, [sg]])
    parts.extend([
        [morph.l4a, morph.l4b, morph.m_B, morph.m_H, morph.m_K, morph.g],
        morph.I_B.reshape(9), morph.I_H.reshape(9), morph.I_K.reshape(9),
        [1.0 if morph.thruster_frame == "body" else 0.0],
    ])
    return np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts])


def pack_ground(ground: GroundParams) -> np.ndarray:
    return np.array([ground.k_gp, ground.k_gd, ground.mu_c, ground.mu_s,
                     ground.mu_v, ground.v_s], dtype=float)


class Stepper:
    """Bound stepping kernel for one (morphology, ground) pair."""

    def __init__(self, morph: RobotMorphology, ground: GroundParams,
                 force_pure: bool = False):
        self.morph = morph
        self.ground = ground
        self.backend = "python" if force_pure else active_backend()
        if self.backend == "compiled":
            self._morph_packed = pack_morphology(morph)
            self._ground_packed = pack_ground(ground)

    def run(self, x: np.ndarray, u_j, u_t, n_sub: int, dt: float):
        """Advance the 30-entry state by n_sub RK4 substeps of size dt.

        Returns (new state, injected actuator/contact work over the block).
        """
        if self.backend == "compiled":
            out = np.array(x, dtype=float, copy=True)
            work = np.zeros(1)
            status = _core.step_block(
                self._morph_packed, self._ground_packed, out,
                np.asarray(u_j, dtype=float), np.asarray(u_t, dtype=float),
                int(n_sub), float(dt), work,
            )
            if status == 1:
                raise NonFiniteDerivativeError("non-finite derivative in compiled kernel")
            if status == 2:
                raise IllConditionedMassMatrix("mass matrix failure in compiled kernel")
            return out, float(work[0])
        return _engine_py.step_block(self.morph, self.ground, x,
                                     np.asarray(u_j, dtype=float),
                                     np.asarray(u_t, dtype=float), int(n_sub), float(dt))
