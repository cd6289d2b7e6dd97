import numpy as np
import pytest

from conftest import flow_advance, random_state, state_with_velocity
from thrustbiped.kinematics import (
    JointAngles,
    foot_offset_in_hip_frame,
    forward_kinematics,
    frame_velocities,
    knee_foot_vector,
    leg_chain,
    position_jacobian,
)
from thrustbiped.morphology import LEFT, RIGHT
from thrustbiped.so3 import rot_x, rot_y
from thrustbiped.state import FullState, pack_state


def _transform_oracle(morph, p_B, R_B, joints, side):
    """Independent 4x4 homogeneous-transform composition of the chain."""
    l1, l2, l3, lt, sg = morph.side_vectors(side)

    def T(R=None, p=None):
        M = np.eye(4)
        if R is not None:
            M[:3, :3] = R
        if p is not None:
            M[:3, 3] = p
        return M

    g, ph, pk = joints
    base = T(R_B, p_B)
    T_P = base @ T(p=l1)
    T_H = T_P @ T(rot_x(sg * g)) @ T(p=l2)
    T_K = T_H @ T(rot_y(ph)) @ T(p=l3)
    T_F = T_K @ T(rot_y(pk)) @ T(p=knee_foot_vector(morph, pk))
    T_T = base @ T(p=lt)
    return {k: M[:3, 3] for k, M in
            dict(p_P=T_P, p_H=T_H, p_K=T_K, p_F=T_F, p_T=T_T).items()}


def test_identity_chain_collapse(morph):
    fk = forward_kinematics(morph, np.zeros(3), np.eye(3), (0.0, 0.0, 0.0), LEFT)
    l1, l2, l3 = morph.l1_B, morph.l2_P, morph.l3_H
    assert np.allclose(fk.p_P, l1, atol=0.0)
    assert np.allclose(fk.p_H, l1 + l2, atol=0.0)
    assert np.allclose(fk.p_K, l1 + l2 + l3, atol=0.0)
    assert np.allclose(fk.p_F - fk.p_K, [-morph.l4a, 0.0, -morph.l4b], atol=1e-15)


def test_knee_linkage_extremes(morph):
    # the closed-form knee-to-foot vector at phi_k = pi/2 ...
    assert np.allclose(knee_foot_vector(morph, np.pi / 2),
                       [0.0, 0.0, -(morph.l4b + morph.l4a)], atol=1e-15)
    # ... and the composed offset in the thigh frame (includes R_y(phi_k))
    assert np.allclose(foot_offset_in_hip_frame(morph, np.pi / 2),
                       [-(morph.l4a + morph.l4b), 0.0, 0.0], atol=1e-15)
    # inside the joint limit the foot stays strictly below the knee
    for pk in np.linspace(-1.45, 1.45, 31):
        assert foot_offset_in_hip_frame(morph, pk)[2] < 0.0


def test_matches_homogeneous_transform_oracle(morph):
    rng = np.random.default_rng(42)
    for _ in range(25):
        s = random_state(rng)
        for side in (LEFT, RIGHT):
            g, ph, pk, *_ = s.joints(side)
            fk = forward_kinematics(morph, s.p_B, s.R, (g, ph, pk), side)
            ref = _transform_oracle(morph, s.p_B, s.R, (g, ph, pk), side)
            for name in ("p_P", "p_H", "p_K", "p_F", "p_T"):
                assert np.allclose(getattr(fk, name), ref[name], atol=1e-12), (side, name)


def test_rejects_non_orthonormal_rotation(morph):
    bad = np.eye(3)
    bad[0, 0] = 1.001
    with pytest.raises(ValueError):
        forward_kinematics(morph, np.zeros(3), bad, (0.0, 0.0, 0.0), LEFT)


def test_joint_angles_validation():
    with pytest.raises(ValueError):
        JointAngles(0.0, 0.0, np.pi / 2)
    with pytest.raises(ValueError):
        JointAngles(np.nan, 0.0, 0.0)


def test_zero_rates_give_zero_velocities(morph):
    rng = np.random.default_rng(0)
    s = random_state(rng)
    s = state_with_velocity(s, np.zeros(10), dphi_k=(0.0, 0.0))
    for side in (LEFT, RIGHT):
        vel = frame_velocities(morph, s, side)
        for name in ("omega_H_B", "omega_K_H", "pdot_P", "pdot_H", "pdot_K", "pdot_F", "pdot_T"):
            assert np.allclose(getattr(vel, name), 0.0, atol=0.0), (side, name)


def test_hip_rate_maps_to_body_frame_angular_velocity(morph):
    x = pack_state(np.eye(3), np.zeros(3), (0.1, -0.2), (0.3, 0.1), (0.2, -0.1),
                   omega=np.zeros(3), pbdot=np.zeros(3),
                   dgammas=(1.0, 0.0), dphi_hs=(0.0, 0.0), dphi_ks=(0.0, 0.0))
    vel = frame_velocities(morph, FullState(x), LEFT)
    assert np.allclose(vel.omega_H_B, [1.0, 0.0, 0.0], atol=0.0)


def test_foot_velocity_matches_finite_difference(morph):
    rng = np.random.default_rng(1)
    h = 1e-6
    for _ in range(10):
        s = random_state(rng)
        for side in (LEFT, RIGHT):
            vel = frame_velocities(morph, s, side)
            g, ph, pk, *_ = flow_advance(s, h).joints(side)
            fp = forward_kinematics(morph, flow_advance(s, h).p_B, flow_advance(s, h).R,
                                    (g, ph, pk), side, check=False)
            g, ph, pk, *_ = flow_advance(s, -h).joints(side)
            fm = forward_kinematics(morph, flow_advance(s, -h).p_B, flow_advance(s, -h).R,
                                    (g, ph, pk), side, check=False)
            fd = (fp.p_F - fm.p_F) / (2.0 * h)
            scale = max(1.0, np.linalg.norm(vel.pdot_F))
            assert np.linalg.norm(fd - vel.pdot_F) / scale < 1e-6


def test_jacobian_columns_reproduce_unit_velocities(morph):
    rng = np.random.default_rng(2)
    s = random_state(rng)
    for side in (LEFT, RIGHT):
        J = position_jacobian(morph, s, "foot", side)
        for k in range(10):
            v = np.zeros(10)
            v[k] = 1.0
            sk = state_with_velocity(s, v)
            vel = frame_velocities(morph, sk, side)
            assert np.allclose(J[:, k], vel.pdot_F, atol=1e-12), (side, k)


def test_thruster_jacobian_has_zero_leg_columns(morph):
    rng = np.random.default_rng(3)
    s = random_state(rng)
    for side in (LEFT, RIGHT):
        J = position_jacobian(morph, s, "thruster", side)
        assert np.array_equal(J[:, 6:], np.zeros((3, 4)))


def test_jacobian_matches_finite_difference(morph):
    rng = np.random.default_rng(4)
    h = 1e-6
    for _ in range(5):
        s = random_state(rng)
        for side in (LEFT, RIGHT):
            J = position_jacobian(morph, s, "foot", side)
            for k in range(10):
                v = np.zeros(10)
                v[k] = 1.0
                sk = state_with_velocity(s, v)
                gp, php, pkp, *_ = flow_advance(sk, h).joints(side)
                fp = forward_kinematics(morph, flow_advance(sk, h).p_B, flow_advance(sk, h).R,
                                        (gp, php, pkp), side, check=False).p_F
                gm, phm, pkm, *_ = flow_advance(sk, -h).joints(side)
                fm = forward_kinematics(morph, flow_advance(sk, -h).p_B, flow_advance(sk, -h).R,
                                        (gm, phm, pkm), side, check=False).p_F
                fd = (fp - fm) / (2.0 * h)
                assert np.linalg.norm(fd - J[:, k]) < 1e-6, (side, k)


def test_velocity_product_terms_match_finite_difference(morph):
    # adot with vdot = 0 equals d/dt (J v) along the frozen-velocity flow
    rng = np.random.default_rng(5)
    h = 1e-6
    for _ in range(5):
        s = random_state(rng)
        for side in (LEFT, RIGHT):
            g, ph, pk, dg, dph, dpk = s.joints(side)
            ch = leg_chain(morph, s.R, s.p_B, JointAngles(g, ph, pk, dg, dph, dpk),
                           side, omega=s.omega, pbdot=s.x[21:24])
            sp, sm = flow_advance(s, h), flow_advance(s, -h)
            out = {}
            for tag, st in (("p", sp), ("m", sm)):
                g2, ph2, pk2, dg2, dph2, dpk2 = st.joints(side)
                out[tag] = leg_chain(morph, st.R, st.p_B,
                                     JointAngles(g2, ph2, pk2, dg2, dph2, dpk2),
                                     side, omega=st.omega, pbdot=st.x[21:24])
            for a_name, w_name in (("a_H_vp", None), ("a_K_vp", None)):
                fd = (getattr(out["p"], a_name.replace("a_", "pdot_").replace("_vp", ""))
                      - getattr(out["m"], a_name.replace("a_", "pdot_").replace("_vp", ""))) / (2 * h)
                got = getattr(ch, a_name)
                assert np.linalg.norm(fd - got) < 1e-5, (side, a_name)
            for w_name, attr in (("w1_vp", "w1"), ("w2_vp", "w2")):
                fd = (getattr(out["p"], attr) - getattr(out["m"], attr)) / (2 * h)
                assert np.linalg.norm(fd - getattr(ch, w_name)) < 1e-6, (side, w_name)


def test_left_right_mirror_symmetry(morph):
    rng = np.random.default_rng(6)
    mirror = np.diag([1.0, -1.0, 1.0])
    for _ in range(10):
        g, ph, pk = rng.uniform(-0.5, 0.5), rng.uniform(-0.8, 0.8), rng.uniform(-1.2, 1.2)
        fl = forward_kinematics(morph, np.zeros(3), np.eye(3), (g, ph, pk), LEFT)
        fr = forward_kinematics(morph, np.zeros(3), np.eye(3), (g, ph, pk), RIGHT)
        for name in ("p_P", "p_H", "p_K", "p_F", "p_T"):
            assert np.allclose(getattr(fr, name), mirror @ getattr(fl, name), atol=1e-15), name


def test_foot_position_affine_in_base_translation(morph):
    rng = np.random.default_rng(7)
    s = random_state(rng)
    g, ph, pk, *_ = s.joints(LEFT)
    d = rng.normal(size=3)
    f0 = forward_kinematics(morph, s.p_B, s.R, (g, ph, pk), LEFT).p_F
    f1 = forward_kinematics(morph, s.p_B + d, s.R, (g, ph, pk), LEFT).p_F
    assert np.allclose(f1, f0 + d, atol=1e-15)


def test_pelvis_to_hip_distance_invariant_under_gamma(morph):
    for g in np.linspace(-1.0, 1.0, 11):
        fk = forward_kinematics(morph, np.zeros(3), np.eye(3), (g, 0.3, -0.2), LEFT)
        assert np.isclose(np.linalg.norm(fk.p_H - fk.p_P), np.linalg.norm(morph.l2_P), atol=1e-14)
