"""Wedge-based reach-cone inclusion and angular error.

The cone is split into wedges (V, P[i], P[i+1]) around the visible point V.
A direction L belongs to wedge ``i`` when ``S[i].L >= 0`` and
``S[i+1].L < 0``; inside that wedge the sign of ``d = B[i].L`` decides
inclusion.  All dot products are spelled out component by component so the
scalar, vectorized and binary-search paths round identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .anatomy import ReachCone
from .frames import tangent_basis
from .kinematics import joint_axes_for_direction

UNIT_TOL = 1e-9
NEAR_AXIS = 1.0 - 1e-12


@dataclass(frozen=True)
class InclusionResult:
    inside: bool
    wedge_index: int
    signed_distance_d: float
    arm_vector_L: np.ndarray


@dataclass(frozen=True)
class AngularError:
    """Rotation that carries L back onto the violated edge's great circle.

    ``per_axis_error_theta_e`` is the rotation vector ``phi * a`` resolved on
    the flexion, abduction and humeral joint axes.  Its sign is such that a
    torque ``K * theta_e`` pushes the arm back toward the cone.  ``outside``
    repeats the inclusion verdict so callers never need to re-derive it
    from a tiny ``phi``.
    """

    rotation_angle_phi: float
    rotation_axis_a: np.ndarray
    per_axis_error_theta_e: tuple[float, float, float]
    outside: bool = False
    projected_L_B: np.ndarray | None = None
    used_vertex_fallback: bool = False

    @classmethod
    def zero(cls) -> "AngularError":
        return cls(0.0, np.array([0.0, 0.0, 1.0]), (0.0, 0.0, 0.0))


def _dots(M: np.ndarray, L) -> np.ndarray:
    return M[:, 0] * L[0] + M[:, 1] * L[1] + M[:, 2] * L[2]


def _check_unit(L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    if L.shape != (3,):
        raise ValueError("L must be a 3-vector")
    if abs(math.sqrt(L[0] * L[0] + L[1] * L[1] + L[2] * L[2]) - 1.0) > UNIT_TOL:
        raise ValueError("L must be a unit vector")
    return L


def _wedge_from_signs(s: np.ndarray, B: np.ndarray, L) -> int:
    s_next = np.empty_like(s)
    s_next[:-1] = s[1:]
    s_next[-1] = s[0]
    hits = np.flatnonzero((s >= 0.0) & (s_next < 0.0))
    if len(hits) == 1:
        return int(hits[0])
    # L (anti)parallel to V: every wedge shares the apex, pick the least violated edge
    return int(np.argmax(_dots(B, L)))


def _result(cone: ReachCone, L: np.ndarray, i: int) -> InclusionResult:
    B = cone.edge_normals_B[i]
    d = float(B[0] * L[0] + B[1] * L[1] + B[2] * L[2])
    return InclusionResult(d >= 0.0, i, d, L)


def point_in_cone(cone: ReachCone, L) -> InclusionResult:
    """Classify one unit direction by linear scan over the wedges."""
    L = _check_unit(L)
    s = _dots(cone.wedge_normals_S, L)
    return _result(cone, L, _wedge_from_signs(s, cone.edge_normals_B, L))


class WedgeLocator:
    """Binary search over the boundary's azimuth about V.

    The azimuth of every vertex around V is precomputed once; a query finds
    its bracket with ``searchsorted`` and then confirms it with the exact
    sign test, so answers always equal :func:`point_in_cone`.
    """

    def __init__(self, cone: ReachCone):
        self.cone = cone
        V = cone.visible_point
        self._u, self._w = tangent_basis(V)
        P = cone.boundary_points
        az = np.arctan2(P @ self._w, P @ self._u)
        # B[i].V > 0 means the vertices turn counter-clockwise about V
        self._start = az[0]
        self._rel = np.mod(az - self._start, 2.0 * np.pi)

    def locate(self, L) -> InclusionResult:
        cone = self.cone
        L = _check_unit(L)
        V = cone.visible_point
        if abs(L[0] * V[0] + L[1] * V[1] + L[2] * V[2]) > NEAR_AXIS:
            return point_in_cone(cone, L)
        rel = math.fmod(math.atan2(L @ self._w, L @ self._u) - self._start, 2.0 * math.pi)
        if rel < 0.0:
            rel += 2.0 * math.pi
        n = cone.n
        guess = (int(np.searchsorted(self._rel, rel, side="right")) - 1) % n
        S = cone.wedge_normals_S
        for i in (guess, (guess + 1) % n, (guess - 1) % n):
            j = (i + 1) % n
            si = S[i, 0] * L[0] + S[i, 1] * L[1] + S[i, 2] * L[2]
            sj = S[j, 0] * L[0] + S[j, 1] * L[1] + S[j, 2] * L[2]
            if si >= 0.0 and sj < 0.0:
                return _result(cone, L, i)
        return point_in_cone(cone, L)


def point_in_cone_bisect(cone: ReachCone, L) -> InclusionResult:
    return WedgeLocator(cone).locate(L)


def classify(cone: ReachCone, L, chunk: int = 8192):
    """Vectorized inclusion for an (M, 3) array.

    Returns ``(inside, wedge_index, d)`` arrays matching :func:`point_in_cone`
    element for element.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[1] != 3:
        raise ValueError("L must have shape (M, 3)")
    S, B = cone.wedge_normals_S, cone.edge_normals_B
    n = cone.n
    m = len(L)
    wedge = np.empty(m, dtype=np.int64)
    d = np.empty(m)
    for lo in range(0, m, chunk):
        Lc = L[lo:lo + chunk]
        s = (Lc[:, 0, None] * S[None, :, 0] + Lc[:, 1, None] * S[None, :, 1]
             + Lc[:, 2, None] * S[None, :, 2])
        hit = (s >= 0.0) & (np.roll(s, -1, axis=1) < 0.0)
        count = hit.sum(axis=1)
        idx = np.argmax(hit, axis=1)
        odd = np.flatnonzero(count != 1)
        for k in odd:
            idx[k] = int(np.argmax(_dots(B, Lc[k])))
        Bi = B[idx]
        wedge[lo:lo + chunk] = idx
        d[lo:lo + chunk] = Bi[:, 0] * Lc[:, 0] + Bi[:, 1] * Lc[:, 1] + Bi[:, 2] * Lc[:, 2]
    assert np.all((wedge >= 0) & (wedge < n))
    return d >= 0.0, wedge, d


def _cross(a, b) -> np.ndarray:
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def rotate(v, axis, angle: float) -> np.ndarray:
    """Rodrigues rotation of ``v`` about unit ``axis``."""
    v = np.asarray(v, dtype=float)
    k = np.asarray(axis, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    return v * c + _cross(k, v) * s + k * float(k @ v) * (1.0 - c)


def closest_surface_rotation(cone: ReachCone, result: InclusionResult, axes=None) -> AngularError:
    """Angle-axis error from L to its projection on the violated edge plane.

    Inside poses yield the zero error.  When L is parallel to the edge
    normal the projection is undefined and the nearest boundary vertex is
    used as the target instead.  ``axes`` (rows: flexion, abduction,
    humeral) should come from the actual joint pose when it is known; from
    L alone the abduction axis is ambiguous past 90 deg abduction.
    """
    if result.inside:
        return AngularError.zero()
    L = np.asarray(result.arm_vector_L, dtype=float)
    B = cone.edge_normals_B[result.wedge_index]
    proj = L - float(L @ B) * B
    norm = math.sqrt(float(proj @ proj))
    fallback = norm <= 1e-9
    if fallback:
        P = cone.boundary_points
        L_B = P[int(np.argmax(P @ L))]
    else:
        L_B = proj / norm
    a = _cross(L, L_B)
    sin_phi = math.sqrt(float(a @ a))
    phi = math.atan2(sin_phi, float(L @ L_B))
    if sin_phi < 1e-15:
        # L_B antipodal to L (only reachable through the vertex fallback): any axis normal to L works
        u, _ = tangent_basis(L)
        axis = u
    else:
        axis = a / sin_phi
    if axes is None:
        axes = joint_axes_for_direction(L)
    rotvec = phi * axis
    theta_e = tuple(float(x) for x in axes @ rotvec)
    err = AngularError(phi, axis, theta_e, outside=True, projected_L_B=L_B,
                       used_vertex_fallback=fallback)
    gap = rotate(L, axis, phi) - L_B
    if float(gap @ gap) > 1e-12:
        raise ArithmeticError("angle-axis error does not reproduce the projected direction")
    return err


def angular_error(cone: ReachCone, L) -> tuple[InclusionResult, AngularError]:
    result = point_in_cone(cone, L)
    return result, closest_surface_rotation(cone, result)
