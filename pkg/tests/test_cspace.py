import math

import numpy as np
import pytest

from oracles import polygon_area_fraction
from shouldertwin.anatomy import REFERENCE_LIMITS, GoniometerLimits, ReachCone, build_reach_cone
from shouldertwin.cspace import (
    CSpaceGrid, boundary_cell_fraction, cell_weights, compare, device_limits, exact_coverage,
    format_summary, rasterize, read_pgm, write_pgm,
)
from shouldertwin.errors import ResolutionMismatch
from shouldertwin.profiles import resolve_profile


def cap(center, radius_deg, n=16):
    """Small circular cone around ``center``, boundary wound positively about it."""
    c = np.asarray(center, dtype=float)
    c /= np.linalg.norm(c)
    u = np.cross(c, [0.0, 0.0, 1.0] if abs(c[2]) < 0.9 else [1.0, 0.0, 0.0])
    u /= np.linalg.norm(u)
    w = np.cross(c, u)
    r = math.radians(radius_deg)
    ang = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    P = math.cos(r) * c + math.sin(r) * (np.cos(ang)[:, None] * u + np.sin(ang)[:, None] * w)
    return ReachCone.from_boundary(P)


@pytest.fixture(scope="module")
def reference_grid(reference_cone):
    return rasterize(reference_cone, (360, 180))


@pytest.mark.parametrize("res", [(16, 16), (360, 180), (97, 33)])
def test_solid_angle_weights_sum_to_sphere(res):
    assert np.sum(cell_weights(res)) == pytest.approx(4 * math.pi, rel=1e-6)


def test_flat_weights_are_uniform():
    assert np.all(cell_weights((20, 16), "flat") == 1.0)
    with pytest.raises(ValueError):
        cell_weights((20, 16), "area")


def test_grid_validation():
    with pytest.raises(ValueError):
        CSpaceGrid((15, 16), np.zeros((16, 15), bool))
    with pytest.raises(ValueError):
        CSpaceGrid((16, 16), np.zeros((16, 17), bool))


def test_hemisphere_is_half(hemisphere_cone):
    assert rasterize(hemisphere_cone, (360, 180)).coverage == pytest.approx(0.5, abs=0.01)


def test_nearly_full_sphere():
    eps = 0.05
    cone = build_reach_cone(GoniometerLimits(*(180.0 - eps,) * 4))
    assert rasterize(cone, (360, 180)).coverage > 0.99
    assert exact_coverage(cone) > 0.9999


def test_reference_coverage(reference_grid, reference_cone):
    assert 0.465 <= reference_grid.coverage <= 0.565
    assert 0.465 <= reference_grid.with_weighting("flat").coverage <= 0.565
    assert reference_grid.coverage == pytest.approx(exact_coverage(reference_cone), abs=0.002)


def test_exact_coverage_matches_independent_area():
    for lim in (REFERENCE_LIMITS, GoniometerLimits(30, 30, 60, 60), GoniometerLimits(170, 10, 100, 5)):
        cone = build_reach_cone(lim)
        assert exact_coverage(cone) == pytest.approx(polygon_area_fraction(cone.boundary_points), abs=1e-12)


def test_compare_with_itself(reference_grid):
    rep = compare(reference_grid, reference_grid)
    assert rep.a_only == 0.0 and rep.b_only == 0.0
    assert rep.both == pytest.approx(reference_grid.coverage)


def test_disjoint_cones():
    a = rasterize(cap([1, 0, 0], 20), (90, 45))
    b = rasterize(cap([-1, 0, 0], 20), (90, 45))
    rep = compare(a, b)
    assert rep.both == 0.0 and rep.a_only > 0 and rep.b_only > 0


def test_fractions_sum_to_one_and_swap(reference_grid, hemisphere_cone):
    other = rasterize(hemisphere_cone, (360, 180))
    for w in ("solid-angle", "flat"):
        ab = compare(reference_grid.with_weighting(w), other.with_weighting(w))
        ba = compare(other.with_weighting(w), reference_grid.with_weighting(w))
        assert ab.a_only + ab.b_only + ab.both + ab.neither == pytest.approx(1.0, abs=1e-9)
        assert (ab.a_only, ab.b_only, ab.both, ab.neither) == pytest.approx(
            (ba.b_only, ba.a_only, ba.both, ba.neither), abs=1e-15)


def test_mismatch_rejected(reference_cone, reference_grid):
    with pytest.raises(ResolutionMismatch):
        compare(reference_grid, rasterize(reference_cone, (180, 90)))
    with pytest.raises(ResolutionMismatch):
        compare(reference_grid, reference_grid.with_weighting("flat"))


def test_refinement_bounded_by_boundary_cells(reference_cone):
    for n_theta, n_phi in ((32, 16), (90, 45), (180, 90)):
        coarse = rasterize(reference_cone, (n_theta, n_phi))
        fine = rasterize(reference_cone, (2 * n_theta, 2 * n_phi))
        assert abs(fine.coverage - coarse.coverage) < boundary_cell_fraction(coarse)


def test_pgm_round_trip(tmp_path, reference_grid):
    path = tmp_path / "mask.pgm"
    write_pgm(reference_grid, path)
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n360 180\n255\n") and len(raw) == 15 + 360 * 180
    again = read_pgm(path)
    assert np.array_equal(again.cells, reference_grid.cells)
    write_pgm(again, tmp_path / "again.pgm")
    assert (tmp_path / "again.pgm").read_bytes() == raw


def test_summary_format(reference_grid):
    text = format_summary(compare(reference_grid, reference_grid), ("human", "human"))
    assert text.splitlines()[0] == "resolution 360x180"
    assert "only human 0.0000%" in text


def test_shipped_device_profile_matches_fit_targets(reference_grid):
    device = resolve_profile("device")
    grid = rasterize(device.reach_cone(), (360, 180))
    rep = compare(reference_grid, grid)
    assert rep.coverage_b == pytest.approx(0.7125, abs=0.02)
    assert rep.a_only <= 0.06
    assert rep.b_only == pytest.approx(0.2875, abs=0.05)


def test_device_limits_shape():
    lim = device_limits(10.0, 80.0)
    assert lim.as_tuple() == (150.0, 80.0, 164.0, 80.0)


def test_coverage_monotone_in_each_limit():
    base = GoniometerLimits(100.0, 40.0, 110.0, 20.0)
    ref = exact_coverage(build_reach_cone(base))
    for field in ("flexion_max", "extension_max", "abduction_max", "adduction_max"):
        bigger = base.replace(**{field: getattr(base, field) + 15.0})
        assert exact_coverage(build_reach_cone(bigger)) >= ref
