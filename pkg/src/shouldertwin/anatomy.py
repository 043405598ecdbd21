"""Reach cones built from clinical goniometer range-of-motion maxima.

A reach cone is a spherical polygon of unit vectors bounding the allowed
directions of the upper arm.  Clinical data give only four maxima
(flexion, extension, abduction, adduction), each measured from the neutral
pose, so the boundary between neighbouring principal directions has to be
interpolated.  Two interpolation strategies are provided:

``"linear"`` (default)
    The polar angle varies linearly with azimuth inside each quadrant.
    It stays well defined when a maximum is zero (adduction is 0 deg for
    the reference adult data), and the cone grows whenever any maximum grows.

``"ellipse"``
    The polar angle follows an ellipse in polar form,
    ``a*b / sqrt((b*cos(alpha))**2 + (a*sin(alpha))**2)``, where ``a`` and
    ``b`` are the maxima at either end of the quadrant.  A quadrant with a
    zero maximum collapses onto the rest direction, so this strategy
    rejects zero maxima with :class:`DegenerateCone`.

Boundary points are stored in *descending* azimuth so that
``P[i] x P[i+1]`` points into the cone.  Index 0 is pure flexion, then
adduction at ``N/4``, extension at ``N/2`` and abduction at ``3N/4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import DegenerateCone, InvalidLimits
from .haptics import TendonModel
from .frames import normalize, swing_coordinates, swing_direction, tangent_basis

DEFAULT_N_POINTS = 64
UNIT_TOL = 1e-9
KERNEL_MARGIN = 1e-9


@dataclass(frozen=True)
class GoniometerLimits:
    """Principal range-of-motion maxima in degrees from the neutral pose."""

    flexion_max: float
    extension_max: float
    abduction_max: float
    adduction_max: float

    def __post_init__(self):
        for name in ("flexion_max", "extension_max", "abduction_max", "adduction_max"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise InvalidLimits(f"{name} must be a finite number, got {value!r}")
            low_ok = value >= 0.0 if name == "adduction_max" else value > 0.0
            if not low_ok or value > 180.0:
                allowed = "[0, 180]" if name == "adduction_max" else "(0, 180]"
                raise InvalidLimits(f"{name}={value} outside {allowed} degrees")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.flexion_max, self.extension_max, self.abduction_max, self.adduction_max)

    def replace(self, **changes) -> "GoniometerLimits":
        values = dict(zip(("flexion_max", "extension_max", "abduction_max", "adduction_max"),
                          self.as_tuple()))
        values.update(changes)
        return GoniometerLimits(**values)


# Reference adult maxima in degrees from neutral.
REFERENCE_LIMITS = GoniometerLimits(160.0, 49.0, 174.0, 0.0)
REFERENCE_HUMERAL_RANGE = (63.0, 92.0)


def principal_directions(limits: GoniometerLimits) -> dict[str, np.ndarray]:
    """The four unit vectors the goniometer maxima define."""
    polar = np.radians([limits.flexion_max, limits.abduction_max,
                        limits.extension_max, limits.adduction_max])
    names = ("flexion", "abduction", "extension", "adduction")
    return {name: swing_direction(p, k * 0.5 * np.pi)
            for k, (name, p) in enumerate(zip(names, polar))}


def _linear_quadrant(a0, a1, alpha):
    t = alpha / (0.5 * np.pi)
    return a0 * (1.0 - t) + a1 * t


def _ellipse_quadrant(a0, a1, alpha):
    if a0 == 0.0 or a1 == 0.0:
        raise DegenerateCone("ellipse interpolation needs non-zero maxima on both sides of a quadrant")
    return a0 * a1 / np.sqrt((a1 * np.cos(alpha)) ** 2 + (a0 * np.sin(alpha)) ** 2)


INTERPOLATORS = {"linear": _linear_quadrant, "ellipse": _ellipse_quadrant}


def swing_limit(limits: GoniometerLimits, azimuth, interpolation: str = "linear"):
    """Interpolated limit polar angle (radians) at ``azimuth`` (radians)."""
    try:
        quadrant_fn = INTERPOLATORS[interpolation]
    except KeyError:
        raise ValueError(f"unknown interpolation {interpolation!r}") from None
    ring = np.radians([limits.flexion_max, limits.abduction_max,
                       limits.extension_max, limits.adduction_max])
    azimuth = np.mod(np.asarray(azimuth, dtype=float), 2.0 * np.pi)
    quadrant = np.minimum((azimuth // (0.5 * np.pi)).astype(int), 3)
    alpha = azimuth - quadrant * 0.5 * np.pi
    out = np.empty_like(azimuth)
    for q in range(4):
        sel = quadrant == q
        if np.any(sel):
            out[sel] = quadrant_fn(ring[q], ring[(q + 1) % 4], alpha[sel])
    return out


@dataclass(frozen=True, eq=False)
class ReachCone:
    """Spherical polygon plus the precomputed wedge normals used for inclusion tests.

    ``edge_normals_B[i]`` is the unit normal of the great circle through
    ``P[i]`` and ``P[i+1]`` (positive inside); ``wedge_normals_S[i]`` is the
    unit normal of the plane through the visible point and ``P[i]``.
    """

    boundary_points: np.ndarray
    visible_point: np.ndarray
    edge_normals_B: np.ndarray
    wedge_normals_S: np.ndarray
    interpolation: str = field(default="custom")

    @classmethod
    def from_boundary(cls, points, visible_point=None, interpolation: str = "custom") -> "ReachCone":
        P = np.array(points, dtype=float)
        if P.ndim != 2 or P.shape[1] != 3 or len(P) < 3:
            raise DegenerateCone("boundary must be an (N, 3) array with N >= 3")
        norms = np.linalg.norm(P, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise DegenerateCone("boundary points must be unit vectors")
        B = edge_normals(P)
        V = choose_visible_point(P) if visible_point is None else np.array(visible_point, dtype=float)
        if abs(np.linalg.norm(V) - 1.0) > UNIT_TOL:
            raise DegenerateCone("visible point must be a unit vector")
        if kernel_margin(P, V, B) <= KERNEL_MARGIN:
            raise DegenerateCone("visible point does not see every boundary edge from inside")
        S = np.cross(V, P)
        S /= np.linalg.norm(S, axis=1, keepdims=True)
        for arr in (P, V, B, S):
            arr.setflags(write=False)
        return cls(P, V, B, S, interpolation)

    @property
    def n(self) -> int:
        return len(self.boundary_points)

    def principal_index(self, name: str) -> int:
        quarter = self.n // 4
        return {"flexion": 0, "adduction": quarter, "extension": 2 * quarter,
                "abduction": 3 * quarter}[name]

    def identical_to(self, other: "ReachCone") -> bool:
        return all(np.array_equal(getattr(self, a), getattr(other, a))
                   for a in ("boundary_points", "visible_point", "edge_normals_B", "wedge_normals_S"))


def edge_normals(P: np.ndarray) -> np.ndarray:
    B = np.cross(P, np.roll(P, -1, axis=0))
    lengths = np.linalg.norm(B, axis=1)
    if np.any(lengths < 1e-12):
        i = int(np.argmin(lengths))
        raise DegenerateCone(f"boundary points {i} and {(i + 1) % len(P)} coincide or are antipodal")
    return B / lengths[:, None]


def kernel_margin(P: np.ndarray, V: np.ndarray, B: np.ndarray | None = None) -> float:
    """Smallest signed sine-distance from ``V`` to the boundary edge circles.

    Positive exactly when every wedge triangle (V, P[i], P[i+1]) is
    positively oriented.  A positive margin together with a single turn of
    the boundary around ``V`` means ``V`` lies in the polygon's kernel, which
    is what the wedge inclusion test requires.
    """
    if B is None:
        B = edge_normals(P)
    margin = float(np.min(B @ V))
    if margin <= 0.0:
        return margin
    u, w = tangent_basis(V)
    angles = np.arctan2(P @ w, P @ u)
    steps = np.mod(np.roll(angles, -1) - angles + np.pi, 2.0 * np.pi) - np.pi
    turns = steps.sum() / (2.0 * np.pi)
    return margin if abs(turns - 1.0) < 1e-6 else -abs(margin)


def _kernel_center(P: np.ndarray, B: np.ndarray) -> np.ndarray:
    # maximise t subject to B V >= t inside the unit box; any positive optimum lies in the kernel
    n = len(B)
    res = linprog(c=[0.0, 0.0, 0.0, -1.0],
                  A_ub=np.hstack([-B, np.ones((n, 1))]), b_ub=np.zeros(n),
                  bounds=[(-1.0, 1.0)] * 3 + [(None, None)], method="highs")
    if res.status != 0 or res.x[3] <= 0.0:
        raise DegenerateCone("boundary is not star-shaped about any interior point")
    return normalize(res.x[:3])


def choose_visible_point(boundary) -> np.ndarray:
    """Pick an interior point from which every boundary edge is visible.

    Candidates are tried in order and the first one inside the polygon's
    kernel wins: the normalized vector sum of the boundary points, the
    swing-plane centroid (mean of the boundary's rest-centred azimuthal
    coordinates, which is exactly the rest direction for symmetric cones),
    and finally the Chebyshev-style centre of the kernel from a small LP.
    """
    P = np.asarray(boundary, dtype=float)
    B = edge_normals(P)

    total = P.sum(axis=0)
    norm = np.linalg.norm(total)
    if norm >= 1e-6:
        V = total / norm
        if kernel_margin(P, V, B) > KERNEL_MARGIN:
            return V

    polar, azimuth = swing_coordinates(P)
    x = np.mean(polar * np.cos(azimuth))
    y = np.mean(polar * np.sin(azimuth))
    V = swing_direction(math.hypot(x, y), math.atan2(y, x))
    if kernel_margin(P, V, B) > KERNEL_MARGIN:
        return V

    V = _kernel_center(P, B)
    if kernel_margin(P, V, B) > KERNEL_MARGIN:
        return V
    raise DegenerateCone("no visible point found inside the cone")


def boundary_directions(limits: GoniometerLimits, n_points: int = DEFAULT_N_POINTS,
                        interpolation: str = "linear") -> np.ndarray:
    """Boundary unit vectors in storage order (descending azimuth, flexion first)."""
    if n_points < 4 or n_points % 4:
        raise ValueError(f"n_points must be >= 4 and divisible by 4, got {n_points}")
    k = np.arange(n_points)
    azimuth_up = k * (2.0 * np.pi / n_points)
    polar_up = swing_limit(limits, azimuth_up, interpolation)
    # principal vertices come straight from the maxima so they are reproduced exactly
    quarter = n_points // 4
    polar_up[0::quarter] = np.radians([limits.flexion_max, limits.abduction_max,
                                       limits.extension_max, limits.adduction_max])
    order = (-k) % n_points
    return swing_direction(polar_up[order], azimuth_up[order])


def build_reach_cone(limits: GoniometerLimits, n_points: int = DEFAULT_N_POINTS,
                     interpolation: str = "linear") -> ReachCone:
    """Interpolate four goniometer maxima into an ``n_points`` reach cone."""
    principal = np.array(list(principal_directions(limits).values()))
    for i in range(4):
        for j in range(i + 1, 4):
            if np.linalg.norm(principal[i] - principal[j]) < 1e-9:
                raise DegenerateCone("two principal range-of-motion points coincide")
    P = boundary_directions(limits, n_points, interpolation)
    return ReachCone.from_boundary(P, interpolation=interpolation)


@dataclass(frozen=True)
class SubjectProfile:
    """Everything needed to emulate one subject.

    Angles in degrees, lengths in metres, damping in N*m*s/rad.  ``coupling``
    holds optional rows ``(gamma, flexion, extension, abduction, adduction)``
    defining humeral-rotation dependent limits.
    """

    limits: GoniometerLimits
    name: str = "subject"
    humeral_rotation_range: tuple[float, float] = REFERENCE_HUMERAL_RANGE
    upper_arm_length_r: float = 0.30
    moment_arm_r_ma: float = 0.0154
    damping_b: float = 0.35
    spring: TendonModel = field(default_factory=TendonModel.quadratic)
    axis_springs: tuple = ()  # (axis name, TendonModel) overrides
    torque_ceiling: float = 5.0
    belt_ratio: float = 3.33
    n_points: int = DEFAULT_N_POINTS
    interpolation: str = "linear"
    coupling: tuple = ()
    coupling_interpolation: str = "slerp"

    def __post_init__(self):
        if not (math.isfinite(self.upper_arm_length_r) and self.upper_arm_length_r > 0):
            raise ValueError("upper_arm_length_r must be positive")
        if not (math.isfinite(self.moment_arm_r_ma) and self.moment_arm_r_ma > 0):
            raise ValueError("moment_arm_r_ma must be positive")
        if not (math.isfinite(self.damping_b) and self.damping_b >= 0):
            raise ValueError("damping_b must be >= 0")
        medial, lateral = self.humeral_rotation_range
        if not (math.isfinite(medial) and math.isfinite(lateral) and 0 <= medial <= lateral):
            raise ValueError("humeral rotation range needs finite angles with 0 <= medial <= lateral")
        if not (self.torque_ceiling > 0 and self.belt_ratio > 0):
            raise ValueError("torque_ceiling and belt_ratio must be positive")

    def reach_cone(self) -> ReachCone:
        return build_reach_cone(self.limits, self.n_points, self.interpolation)

    def axis_models(self) -> tuple:
        overrides = dict(self.axis_springs)
        return tuple(overrides.get(axis, self.spring) for axis in ("flexion", "abduction", "humeral"))


def cone_to_text(cone: ReachCone) -> str:
    """Plain-text cone artifact; floats use ``repr`` so reloading is bit-exact."""
    def row(tag, v):
        return f"{tag} {repr(float(v[0]))} {repr(float(v[1]))} {repr(float(v[2]))}"

    lines = ["# reach cone: P boundary points, V visible point, B edge normals, S wedge normals",
             f"n {cone.n}", f"interpolation {cone.interpolation}", row("V", cone.visible_point)]
    for tag, arr in (("P", cone.boundary_points), ("B", cone.edge_normals_B), ("S", cone.wedge_normals_S)):
        lines += [row(tag, v) for v in arr]
    return "\n".join(lines) + "\n"


def cone_from_text(text: str) -> ReachCone:
    rows = {"P": [], "B": [], "S": [], "V": []}
    n = None
    interpolation = "custom"
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        tag, *rest = line.split()
        try:
            if tag == "n":
                n = int(rest[0])
            elif tag == "interpolation":
                interpolation = rest[0]
            elif tag in rows and len(rest) == 3:
                rows[tag].append([float(x) for x in rest])
            else:
                raise ValueError(tag)
        except (ValueError, IndexError):
            raise DegenerateCone(f"malformed cone artifact at line {lineno}") from None
    if n is None or len(rows["V"]) != 1 or any(len(rows[t]) != n for t in "PBS"):
        raise DegenerateCone("cone artifact is incomplete")
    P, B, S = (np.array(rows[t]) for t in "PBS")
    V = np.array(rows["V"][0])
    fresh = ReachCone.from_boundary(P, V, interpolation)
    if not (np.allclose(fresh.edge_normals_B, B, atol=1e-12) and np.allclose(fresh.wedge_normals_S, S, atol=1e-12)):
        raise DegenerateCone("stored normals do not match the boundary")
    for arr in (P, V, B, S):
        arr.setflags(write=False)
    return ReachCone(P, V, B, S, interpolation)
