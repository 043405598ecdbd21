"""Randomized invariants across modules."""

import math

import numpy as np
from hypothesis import HealthCheck, assume, given, reject, settings
from hypothesis import strategies as st

from shouldertwin.anatomy import GoniometerLimits, build_reach_cone, kernel_margin
from shouldertwin.cspace import CSpaceGrid, cell_weights, compare, exact_coverage
from shouldertwin.errors import DegenerateCone
from shouldertwin.haptics import FREE_ROM, TendonModel, render_torque
from shouldertwin.kinematics import (
    JointPose, arm_direction, extrinsic_to_intrinsic, intrinsic_to_extrinsic, joint_axes,
    orientation_matrix, spherical_fk,
)
from shouldertwin.limits import classify, closest_surface_rotation, point_in_cone, rotate

FAST = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])

angle = st.floats(5.0, 175.0)
limits = st.builds(GoniometerLimits, angle, angle, angle, st.one_of(st.just(0.0), st.floats(0.0, 175.0)))
n_points = st.sampled_from([8, 16, 32, 64])
interp = st.sampled_from(["linear", "ellipse"])


def unit_vectors(seed, n):
    v = np.random.default_rng(seed).normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@FAST
@given(limits, n_points, interp)
def test_cone_vectors_are_unit_and_kernel_visible(lim, n, how):
    # the ellipse rule rejects a zero maximum by design
    assume(how == "linear" or lim.adduction_max > 0)
    cone = build_reach_cone(lim, n, how)
    P, V = cone.boundary_points, cone.visible_point
    assert np.all(np.abs(np.linalg.norm(P, axis=1) - 1.0) < 1e-9)
    assert abs(np.linalg.norm(V) - 1.0) < 1e-9
    assert np.all(np.abs(np.linalg.norm(cone.edge_normals_B, axis=1) - 1.0) < 1e-9)
    assert np.all(np.abs(np.linalg.norm(cone.wedge_normals_S, axis=1) - 1.0) < 1e-9)
    assert kernel_margin(P, V) > 0
    inside, _, d = classify(cone, V[None, :])
    assert inside[0] and d[0] > 0


@FAST
@given(limits, n_points)
def test_principal_points_sit_at_the_limits(lim, n):
    cone = build_reach_cone(lim, n)
    for name, polar in (("flexion", lim.flexion_max), ("extension", lim.extension_max),
                        ("abduction", lim.abduction_max), ("adduction", lim.adduction_max)):
        P = cone.boundary_points[cone.principal_index(name)]
        assert abs(math.degrees(math.acos(max(-1.0, min(1.0, -P[2])))) - polar) < 1e-6


@FAST
@given(limits, st.sampled_from(["flexion_max", "extension_max", "abduction_max", "adduction_max"]),
       st.floats(0.5, 30.0))
def test_coverage_grows_with_each_limit(lim, field, extra):
    bigger = getattr(lim, field) + extra
    if bigger > 180.0:
        return
    grown = lim.replace(**{field: bigger})
    try:
        small, large = build_reach_cone(lim), build_reach_cone(grown)
    except DegenerateCone:
        # e.g. a 180 deg maximum opposite a 0 deg one puts both poles on the boundary
        reject()
    assert exact_coverage(large) >= exact_coverage(small) - 1e-12


@FAST
@given(limits, st.integers(0, 2 ** 32 - 1))
def test_exactly_one_wedge_and_sign_rule(lim, seed):
    cone = build_reach_cone(lim, 32)
    L = unit_vectors(seed, 200)
    s = L @ cone.wedge_normals_S.T
    hits = (s >= 0) & (np.roll(s, -1, axis=1) < 0)
    assert np.all(hits.sum(axis=1) == 1)
    inside, wedge, d = classify(cone, L)
    assert np.array_equal(wedge, np.argmax(hits, axis=1))
    assert np.array_equal(inside, d >= 0)


@FAST
@given(limits, st.integers(0, 2 ** 32 - 1))
def test_error_rotation_lands_on_the_wedge_plane(lim, seed):
    cone = build_reach_cone(lim, 32)
    for L in unit_vectors(seed, 20):
        res = point_in_cone(cone, L)
        err = closest_surface_rotation(cone, res)
        if res.inside:
            assert err.rotation_angle_phi == 0.0 and err.per_axis_error_theta_e == (0.0, 0.0, 0.0)
            continue
        if err.used_vertex_fallback:
            continue
        landed = rotate(L, err.rotation_axis_a, err.rotation_angle_phi)
        assert np.linalg.norm(landed - err.projected_L_B) < 1e-6
        assert abs(landed @ cone.edge_normals_B[res.wedge_index]) < 1e-9


@FAST
@given(st.floats(-500, 500), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_stiffness_respects_clamp(theta, lo, width):
    model = TendonModel(k_clamp=(lo, lo + width))
    k = float(model.stiffness(theta))
    assert lo <= k <= lo + width


@FAST
@given(st.floats(-3.0, 3.0), st.floats(-3.0, 3.0), st.floats(-3.0, 3.0),
       st.tuples(*[st.floats(-5.0, 5.0)] * 3), st.floats(0.1, 10.0))
def test_torque_regime_and_ceiling(theta, phi, gamma, omega, ceiling):
    cone = build_reach_cone(GoniometerLimits(120, 40, 130, 10), 32)
    pose = JointPose(theta, phi, gamma, omega=omega)
    res = point_in_cone(cone, arm_direction(pose))
    err = closest_surface_rotation(cone, res, axes=joint_axes(pose))
    cmd = render_torque(pose, err, TendonModel.quadratic(), ceiling=ceiling)
    assert (cmd.regime == FREE_ROM) == res.inside
    assert max(abs(t) for t in cmd.tau) <= ceiling
    if res.inside:
        assert cmd.spring == (0.0, 0.0, 0.0)


@FAST
@given(st.integers(16, 400), st.integers(16, 200))
def test_grid_weights_cover_the_sphere(n_theta, n_phi):
    w = cell_weights((n_theta, n_phi))
    assert w.shape == (n_phi, n_theta) and np.all(w > 0)
    assert abs(w.sum() - 4 * math.pi) < 1e-9


@FAST
@given(st.integers(16, 40), st.integers(16, 30), st.integers(0, 2 ** 32 - 1),
       st.sampled_from(["solid-angle", "flat"]))
def test_overlap_fractions_partition_and_swap(n_theta, n_phi, seed, weighting):
    rng = np.random.default_rng(seed)
    a = CSpaceGrid((n_theta, n_phi), rng.random((n_phi, n_theta)) < 0.5, weighting)
    b = CSpaceGrid((n_theta, n_phi), rng.random((n_phi, n_theta)) < 0.3, weighting)
    ab, ba = compare(a, b), compare(b, a)
    assert abs(ab.a_only + ab.b_only + ab.both + ab.neither - 1.0) < 1e-12
    assert (ab.a_only, ab.b_only, ab.both, ab.neither) == (ba.b_only, ba.a_only, ba.both, ba.neither)
    assert 0.0 <= a.coverage <= 1.0


@FAST
@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(1e-3, 10.0))
def test_fk_keeps_the_radius(theta, phi, r):
    assert abs(spherical_fk(JointPose(theta, phi), r).norm - r) < 1e-12 * r


@FAST
@given(st.floats(-math.pi, math.pi), st.floats(-1.5, 1.5), st.floats(-math.pi, math.pi),
       st.floats(-math.pi, math.pi), st.floats(-1.0, 1.0), st.floats(-math.pi, math.pi))
def test_mount_round_trip(t, p, g, a, b, c):
    M = orientation_matrix(a, b, c)
    ext = intrinsic_to_extrinsic((t, p, g), M)
    if ext.near_singularity:
        return
    back = extrinsic_to_intrinsic(ext[:3], M)
    R0, R1 = orientation_matrix(t, p, g), orientation_matrix(*back[:3])
    assert np.allclose(R0, R1, atol=1e-9)
