"""Humeral-rotation dependent reach cones.

A :class:`ConeFamily` stores one cone per keyed humeral angle.  Between keys
the boundary vertices are blended pointwise with slerp (vertex ``i`` always
means the same azimuth, so the correspondence is exact), or the nearest key
is used as a step function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .anatomy import GoniometerLimits, ReachCone, SubjectProfile, build_reach_cone
from .errors import DegenerateCone, NeverActivates, OutOfRange
from .frames import ABDUCTION_AZIMUTH, slerp, swing_direction
from .limits import classify, point_in_cone

STRATEGIES = ("slerp", "nearest")

# pure-abduction limits at the internally and externally rotated extremes
ABDUCTION_AT_INTERNAL = (-50.0, 90.0)
ABDUCTION_AT_EXTERNAL = (80.0, 165.0)

ONSET_SCAN_STEP = math.radians(0.25)
ONSET_RESOLUTION = math.radians(0.01)


@dataclass(frozen=True, eq=False)
class ConeFamily:
    keys: tuple[float, ...]
    cones: tuple[ReachCone, ...]
    interpolation: str = "slerp"
    limits: tuple[GoniometerLimits, ...] = ()

    def __post_init__(self):
        if len(self.keys) < 1 or len(self.keys) != len(self.cones):
            raise ValueError("need one cone per key")
        if any(b <= a for a, b in zip(self.keys, self.keys[1:])):
            raise ValueError("keys must be strictly increasing")
        if len({c.n for c in self.cones}) != 1:
            raise ValueError("all cones in a family must share the vertex count")
        if self.interpolation not in STRATEGIES:
            raise ValueError(f"unknown interpolation {self.interpolation!r}")

    @classmethod
    def from_limits(cls, rows, n_points: int = 64, interpolation: str = "slerp",
                    cone_interpolation: str = "linear") -> "ConeFamily":
        rows = sorted(rows, key=lambda r: r[0])
        keys = tuple(float(g) for g, _ in rows)
        lims = tuple(lim for _, lim in rows)
        cones = tuple(build_reach_cone(lim, n_points, cone_interpolation) for lim in lims)
        return cls(keys, cones, interpolation, lims)

    @property
    def span(self) -> tuple[float, float]:
        return self.keys[0], self.keys[-1]

    def covers(self, humeral_range) -> bool:
        medial, lateral = humeral_range
        return self.keys[0] <= -medial and self.keys[-1] >= lateral


def default_family(profile: SubjectProfile) -> ConeFamily:
    """Family used when a profile has no explicit coupling rows.

    Pure-abduction limits go from 90 deg at -50 deg humeral rotation to
    165 deg at +80 deg, linear in between at 0 deg and flat beyond, and are
    capped by the subject's own abduction maximum.  The outer keys stretch
    to cover the subject's humeral range.
    """
    lim = profile.limits
    medial, lateral = profile.humeral_rotation_range
    (g_lo, a_lo), (g_hi, a_hi) = ABDUCTION_AT_INTERNAL, ABDUCTION_AT_EXTERNAL
    a_mid = a_lo + (a_hi - a_lo) * (0.0 - g_lo) / (g_hi - g_lo)
    table = [(g_lo, a_lo), (0.0, a_mid), (g_hi, a_hi)]
    if -medial < g_lo:
        table.insert(0, (-medial, a_lo))
    if lateral > g_hi:
        table.append((lateral, a_hi))
    rows = [(g, lim.replace(abduction_max=min(a, lim.abduction_max))) for g, a in table]
    return ConeFamily.from_limits(rows, profile.n_points, profile.coupling_interpolation,
                                  profile.interpolation)


def family_for_profile(profile: SubjectProfile) -> ConeFamily:
    if profile.coupling:
        rows = [(row[0], GoniometerLimits(*row[1:])) for row in profile.coupling]
        return ConeFamily.from_limits(rows, profile.n_points, profile.coupling_interpolation,
                                      profile.interpolation)
    return default_family(profile)


def constant_family(limits: GoniometerLimits, keys=(-90.0, 0.0, 90.0), n_points: int = 64,
                    interpolation: str = "slerp") -> ConeFamily:
    return ConeFamily.from_limits([(k, limits) for k in keys], n_points, interpolation)


def _bracket(family: ConeFamily, gamma: float) -> tuple[int, float]:
    keys = family.keys
    lo, hi = family.span
    if not (math.isfinite(gamma) and lo <= gamma <= hi):
        raise OutOfRange(f"humeral angle {gamma} outside keyed span [{lo}, {hi}]")
    j = int(np.searchsorted(keys, gamma, side="right")) - 1
    j = min(j, len(keys) - 2) if len(keys) > 1 else 0
    if len(keys) == 1:
        return 0, 0.0
    return j, (gamma - keys[j]) / (keys[j + 1] - keys[j])


def cone_at(family: ConeFamily, gamma: float) -> ReachCone:
    """Cone for humeral angle ``gamma`` (degrees)."""
    j, t = _bracket(family, gamma)
    if t == 0.0:
        return family.cones[j]
    if t == 1.0:
        return family.cones[j + 1]
    if family.interpolation == "nearest":
        return family.cones[j] if t < 0.5 else family.cones[j + 1]
    a, b = family.cones[j], family.cones[j + 1]
    P = slerp(a.boundary_points, b.boundary_points, t)
    tag = f"{a.interpolation}+slerp"
    # the blended visible point almost always stays in the kernel; search only if it does not
    try:
        return ReachCone.from_boundary(P, slerp(a.visible_point, b.visible_point, t), tag)
    except DegenerateCone:
        return ReachCone.from_boundary(P, interpolation=tag)


def abduction_path(angle) -> np.ndarray:
    """Directions along the pure-abduction great circle, ``angle`` in radians from rest."""
    return swing_direction(np.asarray(angle, dtype=float), ABDUCTION_AZIMUTH)


def path_onset(cone: ReachCone, path=abduction_path, max_angle: float = math.pi,
               scan_step: float = ONSET_SCAN_STEP, resolution: float = ONSET_RESOLUTION) -> float:
    """Smallest path parameter (radians) whose direction tests outside ``cone``."""
    grid = np.arange(0.0, max_angle + 0.5 * scan_step, scan_step)
    grid[-1] = min(grid[-1], max_angle)
    inside, _, _ = classify(cone, np.atleast_2d(path(grid)))
    out = np.flatnonzero(~inside)
    if len(out) == 0:
        raise NeverActivates("path never leaves the reach cone")
    k = int(out[0])
    if k == 0:
        return 0.0
    lo, hi = grid[k - 1], grid[k]
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if point_in_cone(cone, path(mid)).inside:
            lo = mid
        else:
            hi = mid
    return float(hi)


def activation_onset(family: ConeFamily, gamma: float, path=abduction_path) -> float:
    """Abduction angle (degrees) at which the resistive torque switches on."""
    return math.degrees(path_onset(cone_at(family, gamma), path))
