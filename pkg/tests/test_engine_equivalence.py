"""The compiled kernel must reproduce the pure-Python reference stepper."""

import numpy as np
import pytest

from conftest import random_state
from thrustbiped.contact import GroundParams
from thrustbiped.engine import Stepper, active_backend, compiled_available
from thrustbiped.gait import GaitConfig
from thrustbiped.simulate import standing_state

needs_core = pytest.mark.skipif(not compiled_available(),
                                reason="compiled kernel not built")


@needs_core
def test_backend_selection(morph):
    stepper = Stepper(morph, GroundParams())
    assert stepper.backend == active_backend()
    assert Stepper(morph, GroundParams(), force_pure=True).backend == "python"


@needs_core
def test_step_block_matches_reference_on_random_states(morph):
    ground = GroundParams()
    fast = Stepper(morph, ground)
    pure = Stepper(morph, ground, force_pure=True)
    rng = np.random.default_rng(0)
    for _ in range(8):
        s = random_state(rng, max_rate=1.0)
        s.x[11] = rng.uniform(0.4, 0.7)   # keep feet near/below ground sometimes
        u_j = rng.uniform(-3.0, 3.0, size=6)
        u_t = rng.uniform(-4.0, 8.0, size=6)
        xf, wf = fast.run(s.x, u_j, u_t, 50, 1e-4)
        xp, wp = pure.run(s.x, u_j, u_t, 50, 1e-4)
        assert np.max(np.abs(xf - xp)) < 1e-10
        assert abs(wf - wp) < 1e-12


@needs_core
def test_step_block_matches_reference_in_contact(morph):
    ground = GroundParams()
    fast = Stepper(morph, ground)
    pure = Stepper(morph, ground, force_pure=True)
    st = standing_state(morph, GaitConfig(), drop_height=0.002, stagger=0.06)
    u_j = np.array([0.5, -0.5, 1.0, -1.0, 5.0, -5.0])
    u_t = np.array([0.0, 0.2, 6.0, 0.1, 0.0, 6.0])
    xf, wf = fast.run(st.x, u_j, u_t, 200, 1e-4)
    xp, wp = pure.run(st.x, u_j, u_t, 200, 1e-4)
    assert np.max(np.abs(xf - xp)) < 1e-9
    assert abs(wf - wp) < 1e-10


@needs_core
def test_compiled_reports_blowup(morph):
    from thrustbiped.integrate import NonFiniteDerivativeError

    ground = GroundParams()
    fast = Stepper(morph, ground)
    bad = standing_state(morph, GaitConfig()).x.copy()
    bad[21] = 1e160  # absurd velocity drives a non-finite stage
    with pytest.raises(NonFiniteDerivativeError):
        fast.run(bad, np.zeros(6), np.zeros(6), 10, 1e-4)


@needs_core
def test_single_derivative_matches(morph):
    from thrustbiped import _core
    from thrustbiped._engine_py import _derivative
    from thrustbiped.dynamics import ControlInput
    from thrustbiped.engine import pack_ground, pack_morphology

    ground = GroundParams()
    mp, gp = pack_morphology(morph), pack_ground(ground)
    rng = np.random.default_rng(1)
    for _ in range(20):
        s = random_state(rng)
        s.x[11] = rng.uniform(0.35, 0.8)
        u_j = rng.uniform(-3.0, 3.0, size=6)
        u_t = rng.uniform(-4.0, 8.0, size=6)
        ydot_c = np.zeros(21)
        status = _core.derivative_once(mp, gp, s.x.copy(), u_j, u_t, ydot_c)
        assert status == 0
        ydot_p, _ = _derivative(morph, ground, s.x.copy(), ControlInput(u_j, u_t))
        scale = max(1.0, np.max(np.abs(ydot_p)))
        assert np.max(np.abs(ydot_c - ydot_p)) / scale < 1e-12


@needs_core
def test_body_frame_thrust_equivalence(morph):
    import dataclasses

    body = dataclasses.replace(morph, thruster_frame="body")
    ground = GroundParams()
    fast = Stepper(body, ground)
    pure = Stepper(body, ground, force_pure=True)
    st = standing_state(body, GaitConfig(), drop_height=0.002)
    st.x[18:21] = [0.8, -0.5, 0.3]
    u_j = np.zeros(6)
    u_t = np.array([0.5, 0.0, 6.0, -0.5, 0.0, 6.0])
    xf, wf = fast.run(st.x, u_j, u_t, 100, 1e-4)
    xp, wp = pure.run(st.x, u_j, u_t, 100, 1e-4)
    assert np.max(np.abs(xf - xp)) < 1e-10
    assert abs(wf - wp) < 1e-12
