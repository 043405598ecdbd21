"""Torque rendering for the virtual tendons.

Inside the free range only viscous damping acts.  Past the boundary each
joint axis also gets a spring torque ``K(|e|) * e`` where ``e`` is that
axis' share of the angular error.  Springs work in degrees and N*cm;
damping is given in N*m*s/rad and converted here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NCM_PER_NM = 100.0
LINEAR_STIFFNESS = 0.072           # N*cm/deg
QUAD_COEFFS = (-0.002, 0.081, -0.093)
STIFFNESS_CLAMP = (0.0, 0.243)     # N*cm/deg
DEFAULT_DAMPING = 0.35             # N*m*s/rad
DEFAULT_MOMENT_ARM = 0.0154        # m
DEFAULT_TORQUE_CEILING = 5.0       # N*cm
CURVE_STEP_DEG = 0.1

FREE_ROM = "free_rom"
TENDON_STRETCH = "tendon_stretch"
AXES = ("flexion", "abduction", "humeral")


@dataclass(frozen=True)
class TendonModel:
    kind: str = "quadratic"
    k_linear: float = LINEAR_STIFFNESS
    quad_coeffs: tuple[float, float, float] = QUAD_COEFFS
    k_clamp: tuple[float, float] = STIFFNESS_CLAMP

    def __post_init__(self):
        if self.kind not in ("linear", "quadratic"):
            raise ValueError(f"unknown tendon model kind {self.kind!r}")
        if not (math.isfinite(self.k_linear) and self.k_linear >= 0.0):
            raise ValueError("k_linear must be finite and >= 0")
        lo, hi = self.k_clamp
        if not (0.0 <= lo <= hi and math.isfinite(hi)):
            raise ValueError("k_clamp must satisfy 0 <= min <= max")
        if len(self.quad_coeffs) != 3 or not all(math.isfinite(c) for c in self.quad_coeffs):
            raise ValueError("quad_coeffs must be three finite numbers")

    @classmethod
    def linear(cls, k: float = LINEAR_STIFFNESS) -> "TendonModel":
        return cls(kind="linear", k_linear=k)

    @classmethod
    def quadratic(cls) -> "TendonModel":
        return cls(kind="quadratic")

    def raw_stiffness(self, theta_deg):
        a2, a1, a0 = self.quad_coeffs
        t = np.asarray(theta_deg, dtype=float)
        return (a2 * t + a1) * t + a0

    @property
    def peak_deg(self) -> float:
        """Error past which a downward-opening polynomial is held at its vertex value."""
        a2, a1, _ = self.quad_coeffs
        return -a1 / (2.0 * a2) if a2 < 0 and a1 > 0 else math.inf

    def stiffness(self, theta_deg):
        """Stiffness in N*cm/deg at error magnitude ``theta_deg`` (degrees)."""
        t = np.abs(np.asarray(theta_deg, dtype=float))
        if self.kind == "linear":
            out = np.full_like(t, self.k_linear)
        else:
            # without the hold the spring would go slack again at large errors
            out = np.clip(self.raw_stiffness(np.minimum(t, self.peak_deg)), *self.k_clamp)
        return out if out.ndim else float(out)

    def torque(self, theta_deg):
        """Spring torque in N*cm for a signed error in degrees."""
        t = np.asarray(theta_deg, dtype=float)
        out = self.stiffness(t) * t
        return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class TorqueCommand:
    tau: tuple[float, float, float]
    regime: str
    timestamp: float = 0.0
    spring: tuple[float, float, float] = (0.0, 0.0, 0.0)
    damping: tuple[float, float, float] = (0.0, 0.0, 0.0)


def _axis_models(model, axis_models) -> tuple:
    if axis_models is None:
        return (model, model, model)
    return tuple(m if m is not None else model for m in axis_models)


def spring_torques(error, model: TendonModel, axis_models=None) -> np.ndarray:
    if not getattr(error, "outside", False):
        return np.zeros(3)
    models = _axis_models(model, axis_models)
    e_deg = np.degrees(np.asarray(error.per_axis_error_theta_e, dtype=float))
    return np.array([m.torque(e) for m, e in zip(models, e_deg)])


def render_torque(pose, error, model: TendonModel, b: float = DEFAULT_DAMPING,
                  ceiling: float = DEFAULT_TORQUE_CEILING, axis_models=None,
                  spring_enabled: bool = True) -> TorqueCommand:
    """Resistive joint torques (N*cm) for one control tick.

    ``error`` comes from the limits module for this pose; its ``outside``
    flag sets the regime.  Every component is clamped to ``ceiling``.
    """
    if b < 0:
        raise ValueError("damping must be >= 0")
    omega = np.asarray(pose.omega, dtype=float)
    damp = -b * NCM_PER_NM * omega
    outside = bool(getattr(error, "outside", False))
    spring = spring_torques(error, model, axis_models) if spring_enabled else np.zeros(3)
    tau = np.clip(spring + damp, -ceiling, ceiling)
    return TorqueCommand(tuple(float(x) for x in tau),
                         TENDON_STRETCH if outside else FREE_ROM,
                         float(pose.timestamp),
                         tuple(float(x) for x in spring),
                         tuple(float(x) for x in damp))


def tensile_to_rotational(displacement_cm: float, load_n: float,
                          r_ma: float = DEFAULT_MOMENT_ARM) -> tuple[float, float]:
    """Map a tendon elongation/load pair to joint angle (deg) and torque (N*cm)."""
    if r_ma <= 0:
        raise ValueError("r_ma must be positive")
    if displacement_cm < 0:
        raise ValueError("displacement must be >= 0")
    r_cm = r_ma * 100.0
    return math.degrees(displacement_cm / r_cm), load_n * r_cm


def ideal_tendon_curve(model: TendonModel, theta_range: float,
                       step: float = CURVE_STEP_DEG) -> tuple[np.ndarray, np.ndarray]:
    if theta_range <= 0:
        raise ValueError("theta_range must be positive")
    n = int(math.floor(theta_range / step + 1e-9))
    theta = np.arange(n + 1) * step
    return theta, model.torque(theta)


def rmse(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def tendon_comparison(theta_range: float = 20.0, k_linear: float = LINEAR_STIFFNESS) -> dict:
    """Linear approximation and quadratic model against the quadratic reference."""
    reference = TendonModel.quadratic()
    theta, ref = ideal_tendon_curve(reference, theta_range)
    _, lin = ideal_tendon_curve(TendonModel.linear(k_linear), theta_range)
    return {"theta": theta, "reference": ref, "linear": lin, "quadratic": ref.copy(),
            "rmse_linear": rmse(lin, ref), "rmse_quadratic": rmse(ref, ref)}
