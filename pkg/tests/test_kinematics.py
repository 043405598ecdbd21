import math

import numpy as np
import pytest

from shouldertwin.kinematics import (
    CartesianPoint, JointPose, angles_from_direction, arm_direction, decompose_orientation,
    detect_singularity, extrinsic_to_intrinsic, intrinsic_to_extrinsic, joint_axes,
    joint_axes_for_direction, orientation_matrix, rot_z, serial_fk, serial_sphere_deviation,
    spherical_fk,
)


def test_spherical_fk_examples():
    p = spherical_fk(JointPose(0.0, 0.0), 1.0)
    assert (p.x, p.y, p.z) == (0.0, 0.0, 1.0)
    q = spherical_fk(JointPose.from_degrees(90.0, 90.0), 0.3)
    assert np.allclose(q.as_array(), [0.0, 0.3, 0.0], atol=1e-16)


def test_spherical_fk_preserves_radius():
    rng = np.random.default_rng(0)
    for theta, phi, r in zip(rng.uniform(-10, 10, 1000), rng.uniform(-10, 10, 1000),
                             rng.uniform(0.01, 2.0, 1000)):
        assert abs(spherical_fk(JointPose(theta, phi), r).norm - r) < 1e-12 * r


def test_spherical_fk_rejects_bad_radius():
    with pytest.raises(ValueError):
        spherical_fk(JointPose(0.0, 0.0), 0.0)


def test_serial_fk_examples():
    p = serial_fk((0.0, 0.0, 0.0), 1.0)
    assert (p.x, p.y, p.z) == (3.0, 0.0, 0.0)
    q = serial_fk((math.pi / 2, 0.0, 0.0), 1.0)
    assert np.allclose(q.as_array(), [0.0, 3.0, 0.0], atol=1e-15)
    with pytest.raises(ValueError):
        serial_fk((0, 0, 0), -1.0)


def test_serial_chain_drifts_off_the_sphere():
    drift = serial_sphere_deviation(0.15)
    assert isinstance(drift, float)
    assert drift > 1e-4
    # a finer linearized tracker drifts less
    assert serial_sphere_deviation(0.15, steps=180) < drift


def test_joint_pose_rejects_non_finite():
    with pytest.raises(ValueError):
        JointPose(float("nan"), 0.0)
    with pytest.raises(ValueError):
        JointPose(0.0, 0.0, omega=(0.0, float("inf"), 0.0))


def test_joint_pose_keeps_unwrapped_angles():
    pose = JointPose(7.5, -9.0, 100.0)
    assert pose.angles.tolist() == [7.5, -9.0, 100.0]


def test_identity_mount_returns_input():
    angles = (0.3, -0.4, 1.2)
    out = intrinsic_to_extrinsic(angles)
    assert np.allclose(out[:3], angles, atol=1e-12)
    assert not out.near_singularity


def test_quarter_turn_mount_swaps_flexion_and_abduction():
    out = intrinsic_to_extrinsic((math.radians(10.0), 0.0, 0.0), rot_z(math.pi / 2))
    # the independently composed matrix
    M = rot_z(math.pi / 2)
    R = M @ orientation_matrix(math.radians(10.0), 0.0, 0.0) @ M.T
    assert np.allclose(orientation_matrix(*out[:3]), R, atol=1e-12)
    assert out.theta_flexion == pytest.approx(0.0, abs=1e-12)
    assert math.degrees(out.phi_abduction) == pytest.approx(10.0, abs=1e-12)


def test_round_trip_off_singularity():
    rng = np.random.default_rng(1)
    mounts = [np.eye(3), rot_z(0.7), orientation_matrix(0.2, -0.3, 0.9)]
    worst = 0.0
    for k in range(1000):
        angles = (rng.uniform(-math.pi, math.pi), rng.uniform(-1.4, 1.4), rng.uniform(-math.pi, math.pi))
        M = mounts[k % 3]
        ext = intrinsic_to_extrinsic(angles, M)
        if ext.near_singularity:
            continue
        back = extrinsic_to_intrinsic(ext[:3], M)
        worst = max(worst, max(abs(math.remainder(a - b, 2 * math.pi)) for a, b in zip(angles, back[:3])))
    assert worst < 1e-9


def test_mount_must_be_rotation():
    with pytest.raises(ValueError):
        intrinsic_to_extrinsic((0, 0, 0), np.diag([1.0, 1.0, -1.0]))


def test_decompose_inverts_orientation():
    R = orientation_matrix(0.4, 0.2, -1.1)
    assert np.allclose(decompose_orientation(R), (0.4, 0.2, -1.1))


@pytest.mark.parametrize("phi_deg,tol_deg,expected", [(90.0, 1.0, True), (0.0, 1.0, False),
                                                      (89.5, 1.0, True), (91.5, 1.0, False),
                                                      (-90.2, 1.0, True), (270.5, 1.0, True)])
def test_detect_singularity_examples(phi_deg, tol_deg, expected):
    assert detect_singularity(JointPose.from_degrees(0.0, phi_deg), math.radians(tol_deg)) is expected


def test_singularity_band_is_exact():
    tol = math.radians(2.0)
    for phi_deg in np.arange(-270.0, 270.0, 0.013):
        band = abs(math.fmod(phi_deg, 180.0) % 180.0 - 90.0)
        if abs(band - 2.0) < 1e-9:
            continue
        assert detect_singularity(JointPose.from_degrees(0.0, phi_deg), tol) == (band < 2.0)


def test_singularity_tol_validation():
    with pytest.raises(ValueError):
        detect_singularity(JointPose(0, 0), 0.0)


def test_flexion_and_humeral_axes_align_at_singularity():
    tol = math.radians(2.0)
    for theta in np.linspace(-2, 2, 9):
        for phi in np.radians([88.5, 90.0, 91.9]):
            axes = joint_axes(JointPose(theta, phi))
            assert np.linalg.norm(np.cross(axes[0], axes[2])) < math.sin(tol)


def test_arm_direction_matches_rotation_of_rest():
    rng = np.random.default_rng(2)
    for t, p, g in rng.uniform(-3, 3, (50, 3)):
        R = orientation_matrix(t, p, g)
        assert np.allclose(arm_direction(JointPose(t, p, g)), R @ [0.0, 0.0, -1.0], atol=1e-14)


def test_joint_axes_from_numeric_jacobian():
    # angular velocity columns by finite differences of the orientation matrix
    rng = np.random.default_rng(3)
    h = 1e-6
    for q in rng.uniform(-1.3, 1.3, (20, 3)):
        R = orientation_matrix(*q)
        axes = joint_axes(JointPose(*q))
        for j in range(3):
            dq = np.zeros(3)
            dq[j] = h
            W = (orientation_matrix(*(q + dq)) - orientation_matrix(*(q - dq))) / (2 * h) @ R.T
            w = np.array([W[2, 1], W[0, 2], W[1, 0]])
            assert np.allclose(w, axes[j], atol=1e-8)


def test_axes_for_direction_match_pose_axes_below_ninety():
    pose = JointPose(0.5, 0.7, 0.2)
    assert np.allclose(joint_axes_for_direction(arm_direction(pose)), joint_axes(pose), atol=1e-12)


def test_angles_from_direction_round_trip():
    for t, p in [(0.3, 0.2), (-1.0, 1.2), (2.5, -0.4)]:
        L = arm_direction(JointPose(t, p))
        assert np.allclose(angles_from_direction(L), (t, p))


def test_cartesian_point():
    assert CartesianPoint(3.0, 4.0, 12.0).norm == 13.0
