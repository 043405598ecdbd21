"""Reachability maps over the sphere of arm directions.

Cells are laid out in swing coordinates about the rest direction: rows are
polar angle (row 0 next to rest), columns are azimuth starting at pure
flexion and turning toward abduction.  With solid-angle weighting a cell
counts by its area on the unit sphere; with flat weighting every cell
counts the same, like counting pixels in the rendered map.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .anatomy import GoniometerLimits, ReachCone, build_reach_cone
from .errors import ResolutionMismatch
from .frames import swing_direction
from .limits import classify

DEFAULT_RESOLUTION = (360, 180)
WEIGHTINGS = ("solid-angle", "flat")
MIN_CELLS = 16


def cell_centers(resolution) -> tuple[np.ndarray, np.ndarray]:
    n_theta, n_phi = resolution
    azimuth = (np.arange(n_theta) + 0.5) * (2.0 * np.pi / n_theta)
    polar = (np.arange(n_phi) + 0.5) * (np.pi / n_phi)
    return polar, azimuth


def cell_weights(resolution, weighting: str = "solid-angle") -> np.ndarray:
    """(n_phi, n_theta) weights; solid-angle weights sum to 4*pi."""
    n_theta, n_phi = resolution
    if weighting == "flat":
        return np.ones((n_phi, n_theta))
    if weighting != "solid-angle":
        raise ValueError(f"unknown weighting {weighting!r}")
    edges = np.linspace(0.0, np.pi, n_phi + 1)
    band = np.cos(edges[:-1]) - np.cos(edges[1:])
    return np.repeat(band[:, None] * (2.0 * np.pi / n_theta), n_theta, axis=1)


@dataclass(frozen=True, eq=False)
class CSpaceGrid:
    resolution: tuple[int, int]
    cells: np.ndarray
    weighting: str = "solid-angle"

    def __post_init__(self):
        n_theta, n_phi = self.resolution
        if n_theta < MIN_CELLS or n_phi < MIN_CELLS:
            raise ValueError(f"resolution must be at least {MIN_CELLS} in each direction")
        if self.cells.shape != (n_phi, n_theta):
            raise ValueError("cells must have shape (n_phi, n_theta)")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"unknown weighting {self.weighting!r}")

    @property
    def weights(self) -> np.ndarray:
        return cell_weights(self.resolution, self.weighting)

    def fraction(self, mask: np.ndarray | None = None) -> float:
        w = self.weights
        m = self.cells if mask is None else mask
        return float(np.sum(w[m]) / np.sum(w))

    @property
    def coverage(self) -> float:
        return self.fraction()

    def with_weighting(self, weighting: str) -> "CSpaceGrid":
        return CSpaceGrid(self.resolution, self.cells, weighting)


def rasterize(cone: ReachCone, resolution=DEFAULT_RESOLUTION,
              weighting: str = "solid-angle") -> CSpaceGrid:
    resolution = (int(resolution[0]), int(resolution[1]))
    polar, azimuth = cell_centers(resolution)
    P, A = np.meshgrid(polar, azimuth, indexing="ij")
    dirs = swing_direction(P.ravel(), A.ravel())
    inside, _, _ = classify(cone, dirs)
    return CSpaceGrid(resolution, inside.reshape(P.shape), weighting)


@dataclass(frozen=True)
class OverlapReport:
    a_only: float
    b_only: float
    both: float
    neither: float
    coverage_a: float
    coverage_b: float
    weighting: str

    def as_dict(self) -> dict:
        return {"coverage_a": self.coverage_a, "coverage_b": self.coverage_b,
                "a_only": self.a_only, "b_only": self.b_only,
                "both": self.both, "neither": self.neither, "weighting": self.weighting}


def compare(grid_a: CSpaceGrid, grid_b: CSpaceGrid) -> OverlapReport:
    if grid_a.resolution != grid_b.resolution or grid_a.weighting != grid_b.weighting:
        raise ResolutionMismatch("grids differ in resolution or weighting")
    a, b = grid_a.cells, grid_b.cells
    w = grid_a.weights
    total = np.sum(w)
    frac = [float(np.sum(w[m]) / total) for m in (a & ~b, ~a & b, a & b)]
    neither = 1.0 - sum(frac)
    return OverlapReport(frac[0], frac[1], frac[2], neither,
                         grid_a.coverage, grid_b.coverage, grid_a.weighting)


def triangle_solid_angle(a, b, c) -> np.ndarray:
    """Signed solid angle of spherical triangles (row-wise)."""
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(num, den)


def exact_coverage(cone: ReachCone) -> float:
    """Area of the spherical polygon over 4*pi, from the fan about V."""
    P = cone.boundary_points
    V = np.broadcast_to(cone.visible_point, P.shape)
    area = np.sum(triangle_solid_angle(V, P, np.roll(P, -1, axis=0)))
    return float(area / (4.0 * np.pi))


def boundary_cell_fraction(grid: CSpaceGrid) -> float:
    """Weighted share of cells with a differently classified 4-neighbour."""
    c = grid.cells
    edge = np.zeros_like(c)
    edge |= c != np.roll(c, 1, axis=1)
    edge |= c != np.roll(c, -1, axis=1)
    edge[1:] |= c[1:] != c[:-1]
    edge[:-1] |= c[:-1] != c[1:]
    return grid.fraction(edge)


def write_pgm(grid: CSpaceGrid, path) -> None:
    """Binary PGM (P5), 255 for reachable cells, row 0 at rest."""
    n_theta, n_phi = grid.resolution
    body = np.where(grid.cells, 255, 0).astype(np.uint8).tobytes()
    Path(path).write_bytes(f"P5\n{n_theta} {n_phi}\n255\n".encode("ascii") + body)


def read_pgm(path, weighting: str = "solid-angle") -> CSpaceGrid:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    n_theta, n_phi = (int(x) for x in parts[1].split())
    pixels = np.frombuffer(parts[3], dtype=np.uint8).reshape(n_phi, n_theta)
    return CSpaceGrid((n_theta, n_phi), pixels > 127, weighting)


def format_summary(report: OverlapReport, names=("a", "b"), resolution=DEFAULT_RESOLUTION) -> str:
    a, b = names
    lines = [f"resolution {resolution[0]}x{resolution[1]}",
             f"weighting {report.weighting}",
             f"coverage {a} {report.coverage_a * 100:.4f}%",
             f"coverage {b} {report.coverage_b * 100:.4f}%",
             f"only {a} {report.a_only * 100:.4f}%",
             f"only {b} {report.b_only * 100:.4f}%",
             f"both {report.both * 100:.4f}%",
             f"neither {report.neither * 100:.4f}%"]
    return "\n".join(lines) + "\n"


def device_limits(shrink: float, back: float) -> GoniometerLimits:
    """Device-shaped limits: narrower forward/side reach, wider backward/inward reach.

    ``shrink`` is taken off the reference flexion and abduction maxima and
    ``back`` is used for both extension and adduction.
    """
    return GoniometerLimits(160.0 - shrink, back, 174.0 - shrink, back)


def _bisect(fn, lo: float, hi: float, target: float, tol: float, increasing: bool = True) -> float:
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        above = fn(mid) > target
        if above == increasing:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def fit_device_limits(human: ReachCone, target_coverage: float = 0.7125,
                      target_human_only: float = 0.0591, resolution=DEFAULT_RESOLUTION,
                      n_points: int = 64, interpolation: str = "linear",
                      tol: float = 1e-4) -> tuple[GoniometerLimits, OverlapReport]:
    """Fit a device cone by nested bisection on solid-angle coverage.

    The inner search sets the extension/adduction reach so total coverage
    hits ``target_coverage``; the outer search sets how much forward and
    side reach the device gives up, which controls how much of the human
    cone it misses.
    """
    human_grid = rasterize(human, resolution)

    def grid_for(shrink, back):
        cone = build_reach_cone(device_limits(shrink, back), n_points, interpolation)
        return rasterize(cone, resolution)

    def back_for(shrink):
        return _bisect(lambda x: grid_for(shrink, x).coverage, 1.0, 179.0, target_coverage, tol)

    def human_only(shrink):
        return compare(human_grid, grid_for(shrink, back_for(shrink))).a_only

    shrink = _bisect(human_only, 0.0, 90.0, target_human_only, tol)
    limits = device_limits(shrink, back_for(shrink))
    cone = build_reach_cone(limits, n_points, interpolation)
    return limits, compare(human_grid, rasterize(cone, resolution))
