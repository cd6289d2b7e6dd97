import numpy as np
import pytest

from thrustbiped.morphology import default_morphology
from thrustbiped.so3 import so3_exp
from thrustbiped.state import (
    SL_OMEGA,
    SL_PB,
    SL_PBDOT,
    SL_PHI_K,
    SL_DPHI_K,
    IDX_DGAMMA,
    IDX_DPHI_H,
    IDX_GAMMA,
    IDX_PHI_H,
    SL_R,
    FullState,
    pack_state,
)


@pytest.fixture(scope="session")
def morph():
    return default_morphology()


def random_rotation(rng) -> np.ndarray:
    return so3_exp(rng.uniform(-1.5, 1.5, size=3))


def random_state(rng, max_rate: float = 2.0) -> FullState:
    """A generic full-order state inside the joint validity region."""
    x = pack_state(
        R=random_rotation(rng),
        p_B=rng.uniform(-0.5, 0.5, size=3) + np.array([0.0, 0.0, 0.8]),
        gammas=rng.uniform(-0.5, 0.5, size=2),
        phi_hs=rng.uniform(-0.8, 0.8, size=2),
        phi_ks=rng.uniform(-1.2, 1.2, size=2),
        omega=rng.uniform(-max_rate, max_rate, size=3),
        pbdot=rng.uniform(-max_rate, max_rate, size=3),
        dgammas=rng.uniform(-max_rate, max_rate, size=2),
        dphi_hs=rng.uniform(-max_rate, max_rate, size=2),
        dphi_ks=rng.uniform(-max_rate, max_rate, size=2),
    )
    return FullState(x)


def flow_advance(state: FullState, h: float) -> FullState:
    """Move the configuration along its velocity for time h (velocities fixed).

    First-order-exact path used by the finite-difference oracles.
    """
    x = state.x.copy()
    R = state.R @ so3_exp(state.omega * h)
    x[SL_R] = R.reshape(9)
    x[SL_PB] = state.x[SL_PB] + h * state.x[SL_PBDOT]
    for i in range(2):
        x[IDX_GAMMA[i]] += h * state.x[IDX_DGAMMA[i]]
        x[IDX_PHI_H[i]] += h * state.x[IDX_DPHI_H[i]]
    x[SL_PHI_K] = state.x[SL_PHI_K] + h * state.x[SL_DPHI_K]
    return FullState(x)


def state_with_velocity(state: FullState, v: np.ndarray, dphi_k=(0.0, 0.0)) -> FullState:
    """Same configuration, velocity coordinates replaced by v (10,)."""
    x = state.x.copy()
    x[SL_OMEGA] = v[0:3]
    x[SL_PBDOT] = v[3:6]
    x[IDX_DGAMMA[0]], x[IDX_DGAMMA[1]] = v[6], v[7]
    x[IDX_DPHI_H[0]], x[IDX_DPHI_H[1]] = v[8], v[9]
    x[SL_DPHI_K] = dphi_k
    return FullState(x)
