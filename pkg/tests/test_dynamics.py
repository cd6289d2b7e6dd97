import dataclasses

import numpy as np
import pytest

from conftest import random_state
from thrustbiped.dynamics import (
    ControlInput,
    IllConditionedMassMatrix,
    angular_momentum_about_com,
    bias_vector,
    forward_dynamics,
    input_maps,
    kinetic_energy,
    mass_matrix,
    total_energy,
)
from thrustbiped.integrate import so3_rk4_step
from thrustbiped.morphology import LEFT, RIGHT
from thrustbiped.state import NV, FullState, pack_state


def _nearly_massless_legs(morph, eps=1e-9):
    return dataclasses.replace(
        morph, m_H=eps, m_K=eps,
        I_H=np.eye(3) * eps, I_K=np.eye(3) * eps,
    )


def _flight_step(morph, state: FullState, u: ControlInput, dt: float) -> FullState:
    """Advance the free-flying robot one step (no ground forces)."""

    def f(R, y):
        x = np.concatenate([R.reshape(9), y])
        xdot = forward_dynamics(morph, FullState(x), u)
        return y[9:12], xdot[9:]  # omega lives at y[9:12]

    R, y = so3_rk4_step(f, state.R, state.x[9:], dt)
    return FullState(np.concatenate([R.reshape(9), y]))


def test_mass_matrix_symmetric(morph):
    rng = np.random.default_rng(0)
    for _ in range(20):
        M = mass_matrix(morph, random_state(rng))
        assert np.linalg.norm(M - M.T) <= 1e-10


def test_mass_matrix_positive_definite(morph):
    rng = np.random.default_rng(1)
    for _ in range(20):
        np.linalg.cholesky(mass_matrix(morph, random_state(rng)))  # raises on failure


def test_knee_rows_are_identity(morph):
    rng = np.random.default_rng(2)
    M = mass_matrix(morph, random_state(rng))
    assert np.array_equal(M[10:, :10], np.zeros((2, 10)))
    assert np.array_equal(M[:10, 10:], np.zeros((10, 2)))
    assert np.array_equal(M[10:, 10:], np.eye(2))


def test_massless_leg_limit_reduces_to_single_body(morph):
    limit = _nearly_massless_legs(morph, eps=1e-12)
    x = pack_state(np.eye(3), [0.0, 0.0, 0.8], (0.2, -0.3), (0.4, 0.1), (0.3, -0.5),
                   omega=np.zeros(3), pbdot=np.zeros(3), dgammas=(0, 0),
                   dphi_hs=(0, 0), dphi_ks=(0, 0))
    M = mass_matrix(limit, FullState(x))
    assert np.allclose(M[3:6, 3:6], limit.m_B * np.eye(3), atol=1e-10)
    assert np.allclose(M[0:3, 0:3], limit.I_B, atol=1e-10)
    assert np.allclose(M[0:3, 3:6], 0.0, atol=1e-10)


def test_quadratic_form_equals_twice_kinetic_energy(morph):
    # v^T M v over random v pins every entry of M against the independent
    # frame-velocity energy evaluation (polarization identity).
    rng = np.random.default_rng(3)
    for _ in range(100):
        s = random_state(rng)
        M = mass_matrix(morph, s)[:NV, :NV]
        v = s.v
        ke = kinetic_energy(morph, s)
        assert abs(float(v @ M @ v) - 2.0 * ke) <= 1e-10 * max(1.0, 2.0 * ke)


def test_bias_reduces_to_gravity_in_static_state(morph):
    x = pack_state(np.eye(3), [0.0, 0.0, 0.8], (0.1, -0.2), (0.3, 0.2), (0.2, 0.1),
                   omega=np.zeros(3), pbdot=np.zeros(3), dgammas=(0, 0),
                   dphi_hs=(0, 0), dphi_ks=(0, 0))
    s = FullState(x)
    h = bias_vector(morph, s)
    assert np.allclose(h[3:6], [0.0, 0.0, morph.total_mass * morph.g], atol=1e-12)
    # free fall from rest: M a + h = 0 must give zddot = -g, nothing else
    xdot = forward_dynamics(morph, s, ControlInput())
    assert np.allclose(xdot[21:24], [0.0, 0.0, -morph.g], atol=1e-9)
    assert np.allclose(xdot[18:21], 0.0, atol=1e-9)


def test_bias_vanishes_without_gravity_at_rest(morph):
    zero_g = dataclasses.replace(morph, g=0.0)
    x = pack_state(np.eye(3), [0.0, 0.0, 0.8], (0.1, -0.2), (0.3, 0.2), (0.2, 0.1),
                   omega=np.zeros(3), pbdot=np.zeros(3), dgammas=(0, 0),
                   dphi_hs=(0, 0), dphi_ks=(0, 0))
    assert np.allclose(bias_vector(zero_g, FullState(x)), 0.0, atol=0.0)


def test_input_map_shapes_and_knee_rows(morph):
    rng = np.random.default_rng(4)
    maps = input_maps(morph, random_state(rng))
    assert maps["B_j"].shape == (12, 6)
    assert np.array_equal(maps["B_j"][6:, :], np.eye(6))
    for name in ("B_t", "B_g"):
        assert maps[name].shape == (12, 6)
        assert np.array_equal(maps[name][10:, :], np.zeros((2, 6)))


def test_ground_force_decouples_across_legs(morph):
    # left-foot force produces no generalized force on right-leg joints
    rng = np.random.default_rng(5)
    B_g = input_maps(morph, random_state(rng))["B_g"]
    assert np.array_equal(B_g[7, 0:3], np.zeros(3))   # gamma_R row, left force
    assert np.array_equal(B_g[9, 0:3], np.zeros(3))   # phi_hR row, left force
    assert np.array_equal(B_g[6, 3:6], np.zeros(3))   # gamma_L row, right force
    assert np.array_equal(B_g[8, 3:6], np.zeros(3))


def test_thruster_virtual_work_balance(morph):
    from thrustbiped.kinematics import frame_velocities

    rng = np.random.default_rng(6)
    for _ in range(10):
        s = random_state(rng)
        B_t = input_maps(morph, s)["B_t"]
        u_t = rng.normal(size=6)
        gen_power = float((B_t[:NV] @ u_t) @ s.v)
        pdot_L = frame_velocities(morph, s, LEFT).pdot_T
        pdot_R = frame_velocities(morph, s, RIGHT).pdot_T
        direct = float(u_t[0:3] @ pdot_L + u_t[3:6] @ pdot_R)
        assert abs(gen_power - direct) <= 1e-10 * max(1.0, abs(direct))


def test_vertical_thrust_through_com_gives_pure_translation(morph):
    limit = dataclasses.replace(_nearly_massless_legs(morph), lt_B=np.zeros(3))
    x = pack_state(np.eye(3), [0.0, 0.0, 1.0], (0.1, 0.2), (-0.2, 0.3), (0.1, -0.1),
                   omega=np.zeros(3), pbdot=np.zeros(3), dgammas=(0, 0),
                   dphi_hs=(0, 0), dphi_ks=(0, 0))
    s = FullState(x)
    F = 12.0
    u = ControlInput(u_t=[0.0, 0.0, F / 2, 0.0, 0.0, F / 2])
    xdot = forward_dynamics(limit, s, u)
    assert np.allclose(xdot[21:24], [0.0, 0.0, F / limit.total_mass - limit.g], atol=1e-6)
    assert np.allclose(xdot[18:21], 0.0, atol=1e-6)


def test_hover_force_balance(morph):
    limit = dataclasses.replace(_nearly_massless_legs(morph), lt_B=np.zeros(3))
    x = pack_state(np.eye(3), [0.0, 0.0, 1.0], (0.0, 0.0), (0.1, -0.1), (0.2, 0.2),
                   omega=np.zeros(3), pbdot=np.zeros(3), dgammas=(0, 0),
                   dphi_hs=(0, 0), dphi_ks=(0, 0))
    w = limit.total_mass * limit.g
    u = ControlInput(u_t=[0.0, 0.0, w / 2, 0.0, 0.0, w / 2])
    xdot = forward_dynamics(limit, FullState(x), u)
    assert np.allclose(xdot[21:24], 0.0, atol=1e-6)


def test_forward_dynamics_deterministic(morph):
    rng = np.random.default_rng(7)
    s = random_state(rng)
    u = ControlInput(u_j=rng.normal(size=6), u_t=rng.normal(size=6))
    u_g = rng.normal(size=6)
    a = forward_dynamics(morph, s, u, u_g)
    b = forward_dynamics(morph, s.copy(), u, u_g)
    assert np.array_equal(a, b)


def test_knee_coordinates_follow_commanded_acceleration(morph):
    rng = np.random.default_rng(8)
    s = random_state(rng)
    u = ControlInput(u_j=[0.0, 0.0, 0.0, 0.0, 3.5, -1.25])
    xdot = forward_dynamics(morph, s, u)
    assert np.array_equal(xdot[28:30], [3.5, -1.25])


def test_flight_energy_conservation_short(morph):
    # unforced flight: K + V must be conserved by the M/h pair
    rng = np.random.default_rng(9)
    s = random_state(rng, max_rate=1.5)
    s.x[28:30] = 0.0  # knees coast; keep them inside the linkage range
    u = ControlInput()
    e0 = total_energy(morph, s)
    dt = 1e-4
    for _ in range(800):  # 0.08 s
        s = _flight_step(morph, s, u, dt)
    e1 = total_energy(morph, s)
    assert abs(e1 - e0) / abs(e0) < 1e-7


def test_flight_momentum_conservation(morph):
    # gravity exerts no torque about the CoM: L_com is constant in flight
    rng = np.random.default_rng(10)
    s = random_state(rng, max_rate=1.5)
    s.x[28:30] = 0.0
    u = ControlInput()
    L0 = angular_momentum_about_com(morph, s)
    dt = 1e-4
    for _ in range(1500):  # 0.15 s
        s = _flight_step(morph, s, u, dt)
    L1 = angular_momentum_about_com(morph, s)
    assert np.linalg.norm(L1 - L0) / max(1.0, np.linalg.norm(L0)) < 1e-6


def test_com_accelerates_at_gravity_in_flight(morph):
    # linear momentum: CoM acceleration equals -g zhat whatever the motion
    rng = np.random.default_rng(11)
    s = random_state(rng, max_rate=1.5)
    s.x[28:30] = 0.0
    u = ControlInput()
    dt = 1e-4
    from thrustbiped.state import com_velocity

    v0 = com_velocity(morph, s)
    n = 800
    for _ in range(n):
        s = _flight_step(morph, s, u, dt)
    v1 = com_velocity(morph, s)
    assert np.allclose(v1 - v0, [0.0, 0.0, -morph.g * n * dt], atol=1e-8)


def test_reports_ill_conditioned_mass_matrix(morph):
    bad = dataclasses.replace(morph, m_H=1e-30, m_K=1e-30,
                              I_B=np.eye(3) * 1e-30, I_H=np.eye(3) * 1e-30,
                              I_K=np.eye(3) * 1e-30)
    x = pack_state(np.eye(3), [0.0, 0.0, 0.8], (0.0, 0.0), (0.0, 0.0), (0.0, 0.0),
                   omega=np.zeros(3), pbdot=np.zeros(3), dgammas=(0, 0),
                   dphi_hs=(0, 0), dphi_ks=(0, 0))
    with pytest.raises(IllConditionedMassMatrix):
        forward_dynamics(bad, FullState(x), ControlInput())


def test_body_frame_thruster_option(morph):
    # with the torso rolled 90 deg, a body-z thruster force pushes along
    # the world axis the body z maps to; the inertial option is unchanged
    from thrustbiped.so3 import rot_x

    body = dataclasses.replace(morph, thruster_frame="body")
    R = rot_x(np.pi / 2)
    x = pack_state(R, [0.0, 0.0, 1.0], (0.0, 0.0), (0.0, 0.0), (0.0, 0.0),
                   omega=np.zeros(3), pbdot=np.zeros(3), dgammas=(0, 0),
                   dphi_hs=(0, 0), dphi_ks=(0, 0))
    s = FullState(x)
    F = 10.0
    u = ControlInput(u_t=[0.0, 0.0, F / 2, 0.0, 0.0, F / 2])
    acc_inertial = forward_dynamics(morph, s, u)[21:24]
    acc_body = forward_dynamics(body, s, u)[21:24]
    # inertial: force stays on world z; body: rotated onto world -y
    assert acc_inertial[2] > acc_body[2]
    assert acc_body[1] < -0.5      # world -y push appears
    with pytest.raises(ValueError):
        dataclasses.replace(morph, thruster_frame="sideways")
