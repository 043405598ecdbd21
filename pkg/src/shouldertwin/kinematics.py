"""Shoulder kinematics.

Two parameterizations live here and they answer different questions.

``spherical_fk`` is the textbook single-centre model: theta is an azimuth
measured from +X in the XY plane, phi a polar angle from +Z, and the elbow
lies on a sphere of radius ``r``.  ``serial_fk`` is the simplified
three-link chain used only to show how far a serial arm drifts from that
sphere.

The device itself is a gimbal: a torso-fixed flexion axis (-Y), an
abduction axis carried by it (+X at zero flexion) and a humeral axis along
the arm.  Its orientation is ``Ry(-theta) @ Rx(phi) @ Rz(gamma)`` and the arm
direction is that matrix applied to the rest direction (-Z).  This chain is
what ``JointPose`` angles mean everywhere else in the package.  It loses a
degree of freedom at 90 deg abduction, where the humeral axis lines up
with the flexion axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import least_squares


DEFAULT_SINGULARITY_TOL = math.radians(2.0)
FLEXION_AXIS = np.array([0.0, -1.0, 0.0])


@dataclass(frozen=True)
class JointPose:
    """Device state: extrinsic anatomical angles (radians) and their rates.

    Angles are stored unwrapped so integrating velocity never jumps.
    """

    theta_flexion: float
    phi_abduction: float
    gamma_humeral: float = 0.0
    omega: tuple[float, float, float] = (0.0, 0.0, 0.0)
    timestamp: float = 0.0

    def __post_init__(self):
        values = (self.theta_flexion, self.phi_abduction, self.gamma_humeral, *self.omega, self.timestamp)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"non-finite pose component in {values}")

    @property
    def angles(self) -> np.ndarray:
        return np.array([self.theta_flexion, self.phi_abduction, self.gamma_humeral])

    @classmethod
    def from_degrees(cls, flexion: float, abduction: float, humeral: float = 0.0, **kw) -> "JointPose":
        return cls(math.radians(flexion), math.radians(abduction), math.radians(humeral), **kw)


@dataclass(frozen=True)
class CartesianPoint:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


def spherical_fk(pose: JointPose, r: float) -> CartesianPoint:
    if r <= 0:
        raise ValueError("r must be positive")
    theta, phi = pose.theta_flexion, pose.phi_abduction
    return CartesianPoint(r * math.cos(theta) * math.sin(phi),
                          r * math.sin(theta) * math.sin(phi),
                          r * math.cos(phi))


def serial_fk(angles, r: float) -> CartesianPoint:
    if r <= 0:
        raise ValueError("r must be positive")
    t1, t2, t3 = angles
    reach = 1.0 + math.cos(t2) + math.cos(t2 + t3)
    return CartesianPoint(r * math.cos(t1) * reach,
                          r * math.sin(t1) * reach,
                          r * math.sin(t2 + t3) + r * math.sin(t2))


def _serial_xz(t2: float, t3: float) -> np.ndarray:
    return np.array([1.0 + math.cos(t2) + math.cos(t2 + t3), math.sin(t2) + math.sin(t2 + t3)])


def serial_sphere_deviation(r: float, theta2_end: float = math.radians(90.0), steps: int = 18,
                            radius: float | None = None) -> float:
    """Max radial drift of a Jacobian-linearized tracker along a sphere.

    The chain starts on a sphere of ``radius`` (default ``2r``) centred on
    its base.  At each increment of theta2 the tracker picks the theta3
    increment from the linearized radial constraint (one least-squares step,
    no re-solve), the way a controller relying on Jacobian linearization
    would.  Returns the largest ``| |p| - radius |`` in metres.
    """
    radius = 2.0 * r if radius is None else radius
    t2 = 0.0
    # start exactly on the sphere
    sol = least_squares(lambda t3: [np.linalg.norm(_serial_xz(0.0, t3[0])) * r - radius],
                        x0=[math.radians(90.0)], bounds=([0.0], [math.pi]))
    t3 = float(sol.x[0])
    h = theta2_end / steps
    worst = 0.0
    for _ in range(steps):
        p = _serial_xz(t2, t3) * r
        # d|p|/dtheta via analytic partials of the planar chain
        dp2 = np.array([-math.sin(t2) - math.sin(t2 + t3), math.cos(t2) + math.cos(t2 + t3)]) * r
        dp3 = np.array([-math.sin(t2 + t3), math.cos(t2 + t3)]) * r
        u = p / np.linalg.norm(p)
        g2, g3 = float(u @ dp2), float(u @ dp3)
        dt3 = -(g2 * h) / g3 if abs(g3) > 1e-12 else 0.0
        t2 += h
        t3 += dt3
        worst = max(worst, abs(np.linalg.norm(_serial_xz(t2, t3)) * r - radius))
    return float(worst)


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def orientation_matrix(theta: float, phi: float, gamma: float) -> np.ndarray:
    return rot_y(-theta) @ rot_x(phi) @ rot_z(gamma)


def decompose_orientation(R: np.ndarray) -> tuple[float, float, float]:
    """Inverse of :func:`orientation_matrix` with phi in [-pi/2, pi/2]."""
    phi = math.atan2(-R[1, 2], math.hypot(R[1, 0], R[1, 1]))
    theta = -math.atan2(R[0, 2], R[2, 2])
    gamma = math.atan2(R[1, 0], R[1, 1])
    return theta, phi, gamma


class ConvertedAngles(NamedTuple):
    theta_flexion: float
    phi_abduction: float
    gamma_humeral: float
    near_singularity: bool


def _check_rotation(mount: np.ndarray) -> np.ndarray:
    M = np.asarray(mount, dtype=float)
    if M.shape != (3, 3) or not np.allclose(M @ M.T, np.eye(3), atol=1e-9) \
            or abs(np.linalg.det(M) - 1.0) > 1e-9:
        raise ValueError("mount must be a proper rotation matrix")
    return M


def intrinsic_to_extrinsic(motor_angles, mount=None,
                           tol: float = DEFAULT_SINGULARITY_TOL) -> ConvertedAngles:
    """Motor-frame gimbal angles to anatomical angles.

    The device frame is the anatomical frame rotated by ``mount``; with a
    single joint centre the conversion is the exact conjugation
    ``mount @ R_motor @ mount.T``.
    """
    M = np.eye(3) if mount is None else _check_rotation(mount)
    R = M @ orientation_matrix(*motor_angles) @ M.T
    theta, phi, gamma = decompose_orientation(R)
    return ConvertedAngles(theta, phi, gamma, _near_singular(phi, tol))


def extrinsic_to_intrinsic(angles, mount=None,
                           tol: float = DEFAULT_SINGULARITY_TOL) -> ConvertedAngles:
    M = np.eye(3) if mount is None else _check_rotation(mount)
    R = M.T @ orientation_matrix(*angles) @ M
    theta, phi, gamma = decompose_orientation(R)
    return ConvertedAngles(theta, phi, gamma, _near_singular(angles[1], tol))


def _near_singular(phi: float, tol: float) -> bool:
    # distance of phi from the nearest odd multiple of 90 deg is below tol
    return abs(math.cos(phi)) < math.sin(tol)


def detect_singularity(pose: JointPose, tol: float = DEFAULT_SINGULARITY_TOL) -> bool:
    """True within ``tol`` of 90 deg abduction (mod 180 deg)."""
    if not 0 < tol < math.pi / 2:
        raise ValueError("tol must lie in (0, pi/2)")
    return _near_singular(pose.phi_abduction, tol)


def arm_direction(pose: JointPose) -> np.ndarray:
    """Unit vector of the upper arm in the torso frame."""
    t, p = pose.theta_flexion, pose.phi_abduction
    cp = math.cos(p)
    return np.array([math.sin(t) * cp, math.sin(p), -math.cos(t) * cp])


def angles_from_direction(L) -> tuple[float, float]:
    """(theta_flexion, phi_abduction) for an arm direction; theta is 0 at the singularity."""
    x, y, z = (float(c) for c in L)
    phi = math.atan2(y, math.hypot(x, z))
    theta = math.atan2(x, -z) if math.hypot(x, z) > 1e-15 else 0.0
    return theta, phi


def joint_axes_for_direction(L) -> np.ndarray:
    """Rows are the flexion, abduction and humeral joint axes (torso frame).

    These are the columns of the gimbal's angular-velocity Jacobian, so a
    torso-frame rotation vector projected on them gives the per-joint
    generalized components.
    """
    L = np.asarray(L, dtype=float)
    h = math.hypot(L[0], L[2])
    abduction_axis = np.array([-L[2] / h, 0.0, L[0] / h]) if h > 1e-12 else np.array([1.0, 0.0, 0.0])
    # gamma turns the arm about its local +Z, which is -L because the arm hangs along -Z
    return np.vstack([FLEXION_AXIS, abduction_axis, -L])


def joint_axes(pose: JointPose) -> np.ndarray:
    """Flexion, abduction and humeral axes of the gimbal at ``pose`` (rows).

    Same as the columns of ``Ry(-theta)``, ``Ry(-theta) Rx(phi)`` applied to
    the local axes; written out because the control loop calls it every tick.
    """
    t, p = pose.theta_flexion, pose.phi_abduction
    st, ct, sp, cp = math.sin(t), math.cos(t), math.sin(p), math.cos(p)
    return np.array([[0.0, -1.0, 0.0], [ct, 0.0, st], [-st * cp, -sp, ct * cp]])
