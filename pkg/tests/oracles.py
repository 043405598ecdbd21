"""Independent reference implementations used only by the tests.

None of these reuse the wedge machinery, the visible point or the
interpolation code from the package.
"""

from __future__ import annotations

import math

import numpy as np


def _det(a, b, c):
    return np.einsum("...i,...i->...", np.cross(a, b), c)


def signed_fan_inside(P, L, apex=None):
    """Point-in-spherical-polygon via a signed triangle fan from an arbitrary apex.

    Every fan triangle (R, P_i, P_{i+1}) contributes +-1 to the points it
    contains, with the sign of its orientation.  Summed over the closed
    polygon this gives the indicator of the region on the positive side of
    the boundary, possibly offset by -1 when R sits inside that region;
    the offset is fixed from the sign of the total signed area.
    """
    P = np.asarray(P, dtype=float)
    L = np.atleast_2d(np.asarray(L, dtype=float))
    R = np.array([0.3, -0.7, 0.648]) if apex is None else np.asarray(apex, dtype=float)
    R = R / np.linalg.norm(R)
    Q = np.roll(P, -1, axis=0)
    count = np.zeros(len(L), dtype=int)
    area = 0.0
    for a, b in zip(P, Q):
        orient = _det(R, a, b)
        sign = 1 if orient > 0 else -1
        s1 = _det(np.broadcast_to(R, L.shape), np.broadcast_to(a, L.shape), L) * sign
        s2 = _det(np.broadcast_to(a, L.shape), np.broadcast_to(b, L.shape), L) * sign
        s3 = _det(np.broadcast_to(b, L.shape), np.broadcast_to(R, L.shape), L) * sign
        # the three signs are the barycentric coordinates of L in the basis (R, a, b)
        inside = (s1 > 0) & (s2 > 0) & (s3 > 0)
        count += sign * inside
        area += signed_triangle_area(R, a, b)
    offset = 0 if area > 0 else 1
    return (count + offset) == 1


def signed_triangle_area(a, b, c) -> float:
    """Signed spherical excess of one triangle (Van Oosterom and Strackee)."""
    num = float(np.dot(a, np.cross(b, c)))
    den = 1.0 + float(np.dot(a, b) + np.dot(b, c) + np.dot(c, a))
    return 2.0 * math.atan2(num, den)


def polygon_area_fraction(P, apex=None) -> float:
    """Area of the positively oriented region bounded by P over 4*pi."""
    P = np.asarray(P, dtype=float)
    R = np.array([0.3, -0.7, 0.648]) if apex is None else np.asarray(apex, dtype=float)
    R = R / np.linalg.norm(R)
    area = sum(signed_triangle_area(R, a, b) for a, b in zip(P, np.roll(P, -1, axis=0)))
    if area < 0:
        area += 4.0 * math.pi
    return area / (4.0 * math.pi)


def arc_distance(P, L):
    """Angular distance from each row of L to the closed great-circle polyline P."""
    P = np.asarray(P, dtype=float)
    L = np.atleast_2d(np.asarray(L, dtype=float))
    Q = np.roll(P, -1, axis=0)
    n = np.cross(P, Q)
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    best = np.full(len(L), np.inf)
    for a, b, nn in zip(P, Q, n):
        h = L @ nn
        foot = L - h[:, None] * nn
        norm = np.linalg.norm(foot, axis=1)
        foot = foot / np.where(norm > 0, norm, 1.0)[:, None]
        # foot lies on the arc iff it is between a and b on the minor arc
        on_arc = (np.cross(a, foot) @ nn >= 0) & (np.cross(foot, b) @ nn >= 0) & (norm > 0)
        d_edge = np.where(on_arc, np.abs(np.arcsin(np.clip(h, -1, 1))), np.inf)
        d_ends = np.minimum(np.arccos(np.clip(L @ a, -1, 1)), np.arccos(np.clip(L @ b, -1, 1)))
        best = np.minimum(best, np.minimum(d_edge, d_ends))
    return best


def dense_boundary(P, per_edge: int = 200):
    """Points sampled along every boundary arc."""
    P = np.asarray(P, dtype=float)
    Q = np.roll(P, -1, axis=0)
    out = []
    for a, b in zip(P, Q):
        omega = math.acos(min(1.0, max(-1.0, float(a @ b))))
        for t in np.linspace(0.0, 1.0, per_edge, endpoint=False):
            v = (math.sin((1 - t) * omega) * a + math.sin(t * omega) * b) / math.sin(omega)
            out.append(v)
    return np.array(out)


def uniform_sphere(n: int, seed: int):
    v = np.random.default_rng(seed).normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def ellipse_polar(a: float, b: float, direction: float) -> float:
    """Polar radius of an axis-aligned ellipse with semi-axes a (direction 0) and b (direction 90 deg).

    Uses the parametric form x = a cos t, y = b sin t and solves for the
    parameter t whose point lies along ``direction`` (radians).
    """
    t = math.atan2(a * math.sin(direction), b * math.cos(direction))
    return math.hypot(a * math.cos(t), b * math.sin(t))


def direction_from_swing(polar_deg: float, azimuth_deg: float):
    """Torso frame: rest is -Z, azimuth 0 toward +X (flexion), 90 toward +Y (abduction)."""
    p, a = math.radians(polar_deg), math.radians(azimuth_deg)
    return np.array([math.sin(p) * math.cos(a), math.sin(p) * math.sin(a), -math.cos(p)])
