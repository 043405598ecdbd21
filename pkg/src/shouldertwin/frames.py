"""Torso frame shared by every module.

Origin at the glenohumeral joint centre.  The arm hangs along -Z in the
neutral (rest) pose, +X points anteriorly (pure flexion swings the arm
toward +X) and +Y points laterally (pure abduction swings it toward +Y).

Swing coordinates describe an arm direction by its polar angle from the
rest direction and an azimuth measured in the XY plane from +X toward +Y:
azimuth 0 is flexion, 90 deg abduction, 180 deg extension, 270 deg adduction.
"""

import numpy as np

REST = np.array([0.0, 0.0, -1.0])
ANTERIOR = np.array([1.0, 0.0, 0.0])
LATERAL = np.array([0.0, 1.0, 0.0])

FLEXION_AZIMUTH = 0.0
ABDUCTION_AZIMUTH = 0.5 * np.pi
EXTENSION_AZIMUTH = np.pi
ADDUCTION_AZIMUTH = 1.5 * np.pi


def swing_direction(polar, azimuth):
    """Unit vector(s) at ``polar`` radians from rest along ``azimuth``.

    Broadcasts over array inputs; the trailing axis of the result holds xyz.
    """
    polar = np.asarray(polar, dtype=float)
    azimuth = np.asarray(azimuth, dtype=float)
    s = np.sin(polar)
    return np.stack([s * np.cos(azimuth), s * np.sin(azimuth), -np.cos(polar)], axis=-1)


def swing_coordinates(v):
    """Inverse of :func:`swing_direction`; azimuth is wrapped to [0, 2*pi)."""
    v = np.asarray(v, dtype=float)
    polar = np.arctan2(np.hypot(v[..., 0], v[..., 1]), -v[..., 2])
    azimuth = np.mod(np.arctan2(v[..., 1], v[..., 0]), 2.0 * np.pi)
    return polar, azimuth


def normalize(v, axis=-1):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=axis, keepdims=True)


def tangent_basis(v):
    """Two unit vectors completing ``v`` to a right-handed orthonormal frame."""
    v = np.asarray(v, dtype=float)
    helper = ANTERIOR if abs(v[0]) < 0.9 else LATERAL
    u = np.cross(helper, v)
    u /= np.linalg.norm(u)
    w = np.cross(v, u)
    return u, w


def slerp(a, b, t):
    """Spherical linear interpolation between unit vectors (row-wise)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = np.clip(np.sum(a * b, axis=-1, keepdims=True), -1.0, 1.0)
    omega = np.arccos(dot)
    so = np.sin(omega)
    small = so < 1e-12
    safe = np.where(small, 1.0, so)
    wa = np.where(small, 1.0 - t, np.sin((1.0 - t) * omega) / safe)
    wb = np.where(small, t, np.sin(t * omega) / safe)
    out = wa * a + wb * b
    out = out / np.linalg.norm(out, axis=-1, keepdims=True)
    # equal endpoints come back untouched rather than re-rounded
    return np.where(np.all(a == b, axis=-1, keepdims=True), a, out)
