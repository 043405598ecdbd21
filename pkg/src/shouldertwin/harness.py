"""Fixed-rate simulation of a manipulator dragging the shoulder twin.

The manipulator holds the arm at a grip point through a spring (linear
stiffness on the grip point, rotational stiffness about the arm).  The
shoulder has no inertia: each tick the grasp torque balances the joint
torque produced by the motors, where the motor command is the rendered
spring torque minus damping, clamped to the ceiling and scaled by the belt
ratio.  That balance is piecewise linear in the new joint velocity and is
solved exactly per axis.

Units in logs: angles in rad, rates in rad/s, torques in N*cm, forces in N.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .anatomy import SubjectProfile
from .coupling import ConeFamily, cone_at, family_for_profile
from .errors import ParseError, RangeError, SchemaError, SimulationDiverged, SlipEvent
from .frames import slerp
from .haptics import NCM_PER_NM, TENDON_STRETCH, TendonModel, render_torque, spring_torques
from .kinematics import JointPose, angles_from_direction, arm_direction, joint_axes
from .limits import _cross, closest_surface_rotation, point_in_cone
from .profiles import _line_of, check_keys, number, parse_toml

INTERPOLATIONS = ("joint-linear", "cartesian-arc")
RATE_RANGE = (100.0, 10000.0)
GAMMA_LOOKUP_DECIMALS = 3
J_PER_NCM_RAD = 0.01

CSV_COLUMNS = ("t", "theta", "phi", "gamma", "omega_theta", "omega_phi", "omega_gamma",
               "tau_flexion", "tau_abduction", "tau_humeral",
               "sensed_flexion", "sensed_abduction", "sensed_humeral",
               "fx", "fy", "fz", "mx", "my", "mz", "regime", "inside", "d", "slip")


@dataclass(frozen=True)
class GraspModel:
    grip_distance: float = 0.30        # m from the joint centre
    k_linear: float = 5000.0           # N/m on the grip point
    k_rotational: float = 5000.0       # N*cm/rad about the arm
    slip_threshold: float = 20.0       # N

    def __post_init__(self):
        for name in ("grip_distance", "k_linear", "k_rotational", "slip_threshold"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class Waypoint:
    """Either ``angles`` (flexion, abduction, humeral in degrees) or an ``elbow`` point in metres."""

    angles: tuple[float, float, float] | None = None
    elbow: tuple[float, float, float] | None = None
    humeral: float = 0.0
    dwell: float = 0.0
    duration: float | None = None

    def __post_init__(self):
        if (self.angles is None) == (self.elbow is None):
            raise ValueError("a waypoint needs exactly one of angles or elbow")
        if self.elbow is not None and np.linalg.norm(self.elbow) <= 0:
            raise ValueError("elbow target must not be the joint centre")
        if not self.dwell >= 0:
            raise ValueError("dwell must be >= 0")
        if self.duration is not None and not self.duration >= 0:
            raise ValueError("duration must be >= 0")


def _nearest_branch(L, ref) -> tuple[float, float]:
    """Gimbal angles for direction L closest to ``ref`` (theta, phi), unwrapped."""
    x, y, z = L
    if math.hypot(x, z) < 1e-12:
        theta0, phi0 = ref[0], math.copysign(math.pi / 2, y)
    else:
        theta0, phi0 = angles_from_direction(L)
    best = None
    for th, ph in ((theta0, phi0), (theta0 + math.pi, math.pi - phi0), (theta0 + math.pi, -math.pi - phi0)):
        th += 2 * math.pi * round((ref[0] - th) / (2 * math.pi))
        ph += 2 * math.pi * round((ref[1] - ph) / (2 * math.pi))
        cost = (th - ref[0]) ** 2 + (ph - ref[1]) ** 2
        if best is None or cost < best[0]:
            best = (cost, th, ph)
    return best[1], best[2]


def _direction(theta: float, phi: float) -> np.ndarray:
    st, ct, sp, cp = math.sin(theta), math.cos(theta), math.sin(phi), math.cos(phi)
    return np.array([st * cp, sp, -ct * cp])


def quintic(s: float) -> float:
    s = min(max(s, 0.0), 1.0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


@dataclass(frozen=True)
class Trajectory:
    waypoints: tuple[Waypoint, ...]
    interpolation: str = "joint-linear"
    rate: float = 1000.0
    speed: float = 10.0                # deg/s, sets segment durations
    name: str = "trajectory"
    _segments: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise ValueError("a trajectory needs at least two waypoints")
        if not RATE_RANGE[0] <= self.rate <= RATE_RANGE[1]:
            raise ValueError(f"rate must lie in [{RATE_RANGE[0]:g}, {RATE_RANGE[1]:g}] Hz")
        if self.interpolation not in INTERPOLATIONS:
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        if not self.speed > 0:
            raise ValueError("speed must be positive")
        object.__setattr__(self, "_segments", self._plan())

    def _resolve(self, wp: Waypoint, ref) -> np.ndarray:
        if wp.angles is not None:
            return np.radians(np.asarray(wp.angles, dtype=float))
        L = np.asarray(wp.elbow, dtype=float) / np.linalg.norm(wp.elbow)
        theta, phi = _nearest_branch(L, ref)
        return np.array([theta, phi, math.radians(wp.humeral)])

    def _plan(self):
        # (start time, duration, q0, q1, kind) with kind "hold" or "move"
        segs = []
        t = 0.0
        q = self._resolve(self.waypoints[0], (0.0, 0.0))
        for k, wp in enumerate(self.waypoints):
            if k > 0:
                q1 = self._resolve(wp, q)
                if self.interpolation == "joint-linear":
                    travel = float(np.max(np.abs(q1 - q)))
                else:
                    L0 = arm_direction(JointPose(q[0], q[1]))
                    L1 = arm_direction(JointPose(q1[0], q1[1]))
                    travel = max(math.acos(max(-1.0, min(1.0, float(L0 @ L1)))), abs(q1[2] - q[2]))
                duration = wp.duration if wp.duration is not None else math.degrees(travel) / self.speed
                if duration > 0:
                    segs.append((t, duration, q, q1, "move"))
                    t += duration
                q = q1
            if wp.dwell > 0:
                segs.append((t, wp.dwell, q, q, "hold"))
                t += wp.dwell
        if not segs:
            segs.append((0.0, 0.0, q, q, "hold"))
        return tuple(segs)

    @property
    def duration(self) -> float:
        t0, d, *_ = self._segments[-1]
        return t0 + d

    @property
    def start(self) -> np.ndarray:
        return self._segments[0][2].copy()

    def setpoint(self, t: float) -> np.ndarray:
        """Commanded (theta, phi, gamma) in radians at time ``t``."""
        seg = self._segments[-1]
        for s in self._segments:
            if t < s[0] + s[1]:
                seg = s
                break
        t0, dur, q0, q1, kind = seg
        if kind == "hold" or dur == 0:
            return q1.copy() if t >= t0 + dur else q0.copy()
        s = quintic((t - t0) / dur)
        q_lin = q0 + s * (q1 - q0)
        if self.interpolation == "joint-linear":
            return q_lin
        L0 = arm_direction(JointPose(q0[0], q0[1]))
        L1 = arm_direction(JointPose(q1[0], q1[1]))
        L = slerp(L0, L1, s)
        theta, phi = _nearest_branch(L, q_lin)
        return np.array([theta, phi, q_lin[2]])


@dataclass
class TrajectoryLog:
    t: np.ndarray
    q: np.ndarray
    omega: np.ndarray
    tau: np.ndarray
    spring: np.ndarray
    sensed: np.ndarray
    force: np.ndarray
    moment: np.ndarray
    regime: list
    inside: np.ndarray
    d: np.ndarray
    slip: np.ndarray
    rate: float
    passive: bool = False
    manipulator_work: float = 0.0      # J
    damping_dissipation: float = 0.0   # J

    def __len__(self):
        return len(self.t)

    def pose(self, k: int) -> JointPose:
        return JointPose(*(float(x) for x in self.q[k]), omega=tuple(float(x) for x in self.omega[k]),
                         timestamp=float(self.t[k]))

    def identical_to(self, other: "TrajectoryLog") -> bool:
        arrays = ("t", "q", "omega", "tau", "spring", "sensed", "force", "moment", "inside", "d", "slip")
        return (all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)
                and self.regime == other.regime
                and self.manipulator_work == other.manipulator_work
                and self.damping_dissipation == other.damping_dissipation)

    def activation_onsets(self) -> list[dict]:
        onsets = []
        for k in range(1, len(self.t)):
            if self.regime[k] == TENDON_STRETCH and self.regime[k - 1] != TENDON_STRETCH:
                onsets.append({"t": float(self.t[k]),
                               "flexion_deg": math.degrees(self.q[k, 0]),
                               "abduction_deg": math.degrees(self.q[k, 1]),
                               "humeral_deg": math.degrees(self.q[k, 2])})
        return onsets

    def summary(self) -> dict:
        return {
            "rows": len(self.t),
            "rate_hz": self.rate,
            "duration_s": float(self.t[-1]) if len(self.t) else 0.0,
            "passive": self.passive,
            "peak_torque_ncm": [float(x) for x in np.max(np.abs(self.tau), axis=0)],
            "peak_sensed_torque_ncm": [float(x) for x in np.max(np.abs(self.sensed), axis=0)],
            "peak_force_n": float(np.max(np.linalg.norm(self.force, axis=1))),
            "activation_onsets": self.activation_onsets(),
            "energy_j": {"manipulator_work": self.manipulator_work,
                         "damping_dissipation": self.damping_dissipation},
            "slip_events": int(np.sum(self.slip)),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for k in range(len(self.t)):
            writer.writerow([repr(float(self.t[k])), *(repr(float(x)) for x in self.q[k]),
                             *(repr(float(x)) for x in self.omega[k]),
                             *(repr(float(x)) for x in self.tau[k]),
                             *(repr(float(x)) for x in self.sensed[k]),
                             *(repr(float(x)) for x in self.force[k]),
                             *(repr(float(x)) for x in self.moment[k]),
                             self.regime[k], int(self.inside[k]), repr(float(self.d[k])),
                             int(self.slip[k])])
        return buf.getvalue()

    def write(self, out_dir, stem: str = "log") -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = out / f"{stem}.csv", out / f"{stem}.json"
        csv_path.write_text(self.to_csv(), newline="\n")
        json_path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path


class ShoulderSim:
    """Per-run context: subject parameters, cone lookup and the step rule."""

    def __init__(self, profile: SubjectProfile, family: ConeFamily, grasp: GraspModel,
                 passive: bool = False, model: TendonModel | None = None,
                 noise: tuple[float, float] = (0.0, 0.0), seed: int = 0, abort_on_slip: bool = False):
        self.profile = profile
        self.family = family
        self.grasp = grasp
        self.passive = passive
        self.model = model if model is not None else profile.spring
        self.axis_models = profile.axis_models() if model is None else None
        self.noise = noise
        self.rng = np.random.default_rng(seed)
        self.abort_on_slip = abort_on_slip
        self._cones = {}
        self._last = None

    def cone_for(self, gamma: float):
        lo, hi = self.family.span
        key = round(min(max(math.degrees(gamma), lo), hi), GAMMA_LOOKUP_DECIMALS)
        cone = self._cones.get(key)
        if cone is None:
            cone = self._cones[key] = cone_at(self.family, key)
        return cone

    def render(self, pose: JointPose):
        if self._last is not None and self._last[0] == pose:
            return self._last[1]
        out = self._render(pose)
        self._last = (pose, out)
        return out

    def _render(self, pose: JointPose):
        cone = self.cone_for(pose.gamma_humeral)
        result = point_in_cone(cone, arm_direction(pose))
        error = closest_surface_rotation(cone, result, axes=joint_axes(pose))
        p = self.profile
        cmd = render_torque(pose, error, self.model, p.damping_b, p.torque_ceiling,
                            self.axis_models, spring_enabled=not self.passive)
        return result, error, cmd

    def gains(self, phi: float) -> np.ndarray:
        g = self.grasp
        arm = NCM_PER_NM * g.k_linear * g.grip_distance ** 2
        return np.array([g.k_rotational + arm * math.cos(phi) ** 2, g.k_rotational + arm, g.k_rotational])

    def _solve(self, K, e, tau_s, dt):
        p = self.profile
        D, r, c = NCM_PER_NM * p.damping_b, p.belt_ratio, p.torque_ceiling
        w = np.empty(3)
        for j in range(3):
            if K[j] == 0.0:
                w[j] = tau_s[j] / D if D > 0 else 0.0
                continue
            wj = (K[j] * e[j] + r * tau_s[j]) / (K[j] * dt + r * D)
            m = tau_s[j] - D * wj
            if m > c:
                wj = (K[j] * e[j] + r * c) / (K[j] * dt)
            elif m < -c:
                wj = (K[j] * e[j] - r * c) / (K[j] * dt)
            w[j] = wj
        return w

    def grip_force(self, q_set, q) -> np.ndarray:
        g = self.grasp
        return (g.k_linear * g.grip_distance) * (_direction(q_set[0], q_set[1]) - _direction(q[0], q[1]))

    def step(self, state: JointPose, target, dt: float, t_next: float):
        """Advance one tick toward ``target``; returns (new pose, row dict)."""
        q = state.angles
        target = np.asarray(target, dtype=float)
        _, error, _ = self.render(state)
        tau_s = np.zeros(3) if self.passive else spring_torques(error, self.model, self.axis_models)
        K = self.gains(q[1])
        e = target - q
        w = self._solve(K, e, tau_s, dt)
        q_new = q + w * dt
        slip = False
        F = self.grip_force(target, q_new)
        if float(np.linalg.norm(F)) > self.grasp.slip_threshold:
            if self.abort_on_slip:
                raise SlipEvent(f"grasp slipped at t={t_next:.6f}s, |F|={np.linalg.norm(F):.3f} N",
                                t_next, float(np.linalg.norm(F)))
            slip = True
            K = np.zeros(3)
            w = self._solve(K, e, tau_s, dt)
            q_new = q + w * dt
        if not (np.all(np.isfinite(q_new)) and np.all(np.isfinite(w))):
            raise SimulationDiverged(f"non-finite state at t={t_next:.6f}s")
        pose = JointPose(*(float(x) for x in q_new), omega=tuple(float(x) for x in w), timestamp=t_next)
        row = self._row(pose, target, K, slip)
        p = self.profile
        row["work"] = float(np.sum(row["sensed_clean"] * w) * dt) * J_PER_NCM_RAD
        # the damping share of the clamped command always opposes w, so this is never negative
        c = p.torque_ceiling
        motor = np.clip(tau_s - NCM_PER_NM * p.damping_b * w, -c, c)
        damping_share = motor - np.clip(tau_s, -c, c)
        row["dissipation"] = float(-p.belt_ratio * np.sum(damping_share * w) * dt) * J_PER_NCM_RAD
        return pose, row

    def _row(self, pose: JointPose, target, K, slip: bool) -> dict:
        result, error, cmd = self.render(pose)
        q_new = pose.angles
        if slip:
            sensed = np.zeros(3)
            F = np.zeros(3)
            M = np.zeros(3)
        else:
            sensed = K * (target - q_new)
            F = self.grip_force(target, q_new)
            L = arm_direction(pose)
            M = NCM_PER_NM * _cross(self.grasp.grip_distance * L, F) \
                + self.grasp.k_rotational * (target[2] - q_new[2]) * -L
        clean = sensed.copy()
        sigma_f, sigma_m = self.noise
        if sigma_f > 0:
            F = F + self.rng.normal(0.0, sigma_f, 3)
        if sigma_m > 0:
            M = M + self.rng.normal(0.0, sigma_m, 3)
            sensed = sensed + self.rng.normal(0.0, sigma_m, 3)
        return {"pose": pose, "cmd": cmd, "result": result, "sensed": sensed, "sensed_clean": clean,
                "force": F, "moment": M, "slip": slip}


def run_trajectory(profile: SubjectProfile, family: ConeFamily | None, traj: Trajectory,
                   grasp: GraspModel | None = None, passive: bool = False,
                   model: TendonModel | None = None, noise: tuple[float, float] = (0.0, 0.0),
                   seed: int = 0, abort_on_slip: bool = False) -> TrajectoryLog:
    family = family if family is not None else family_for_profile(profile)
    grasp = grasp if grasp is not None else GraspModel(grip_distance=profile.upper_arm_length_r)
    sim = ShoulderSim(profile, family, grasp, passive, model, noise, seed, abort_on_slip)
    rate = float(traj.rate)
    dt = 1.0 / rate
    n = int(round(traj.duration * rate))
    q0 = traj.setpoint(0.0)
    state = JointPose(*(float(x) for x in q0))
    rows = [sim._row(state, q0, sim.gains(q0[1]), False)]
    work = dissipation = 0.0
    for k in range(1, n + 1):
        t = k / rate
        state, row = sim.step(state, traj.setpoint(t), dt, t)
        work += row["work"]
        dissipation += row["dissipation"]
        rows.append(row)
    return TrajectoryLog(
        t=np.array([k / rate for k in range(n + 1)]),
        q=np.array([r["pose"].angles for r in rows]),
        omega=np.array([r["pose"].omega for r in rows]),
        tau=np.array([r["cmd"].tau for r in rows]),
        spring=np.array([r["cmd"].spring for r in rows]),
        sensed=np.array([r["sensed"] for r in rows]),
        force=np.array([r["force"] for r in rows]),
        moment=np.array([r["moment"] for r in rows]),
        regime=[r["cmd"].regime for r in rows],
        inside=np.array([r["result"].inside for r in rows]),
        d=np.array([r["result"].signed_distance_d for r in rows]),
        slip=np.array([r["slip"] for r in rows]),
        rate=rate, passive=passive, manipulator_work=work, damping_dissipation=dissipation)


def replay_torques(log: TrajectoryLog, profile: SubjectProfile, family: ConeFamily | None = None,
                   model: TendonModel | None = None) -> tuple[np.ndarray, list]:
    """Re-render torques and regimes from the logged poses alone."""
    family = family if family is not None else family_for_profile(profile)
    sim = ShoulderSim(profile, family, GraspModel(), log.passive, model)
    taus, regimes = [], []
    for k in range(len(log)):
        _, _, cmd = sim.render(log.pose(k))
        taus.append(cmd.tau)
        regimes.append(cmd.regime)
    return np.array(taus), regimes


_TRAJ_SCHEMA = {"": {"name", "rate", "interpolation", "speed", "grasp", "waypoints"},
                "grasp": {"grip_distance", "k_linear", "k_rotational", "slip_threshold"}}
_WAYPOINT_KEYS = {"angles", "elbow", "humeral", "dwell", "duration"}


def load_trajectory(text: str) -> tuple[Trajectory, GraspModel | None]:
    """Parse a trajectory document; returns the trajectory and an optional grasp."""
    doc = parse_toml(text)
    check_keys(doc, _TRAJ_SCHEMA, text)
    wps = doc.get("waypoints")
    if not isinstance(wps, list) or not wps:
        raise SchemaError("missing [[waypoints]] entries", field="waypoints")
    waypoints = []
    for i, w in enumerate(wps):
        check_keys({"waypoints": w}, {"waypoints": _WAYPOINT_KEYS}, text)
        section = f"waypoints[{i}]"
        vec = {}
        for key in ("angles", "elbow"):
            if key in w:
                v = w[key]
                if (not isinstance(v, list) or len(v) != 3
                        or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v)):
                    raise ParseError("expected three numbers", line=_line_of(text, key), field=f"{section}.{key}")
                vec[key] = tuple(float(x) for x in v)
        try:
            waypoints.append(Waypoint(
                angles=vec.get("angles"), elbow=vec.get("elbow"),
                humeral=number(w, "humeral", section, text, 0.0),
                dwell=number(w, "dwell", section, text, 0.0),
                duration=number(w, "duration", section, text) if "duration" in w else None))
        except ValueError as exc:
            raise RangeError(str(exc), field=section) from None
    interpolation = doc.get("interpolation", "joint-linear")
    if interpolation not in INTERPOLATIONS:
        raise ParseError(f"expected one of {list(INTERPOLATIONS)}", line=_line_of(text, "interpolation"),
                         field="interpolation")
    name = doc.get("name", "trajectory")
    if not isinstance(name, str):
        raise ParseError("expected a string", line=_line_of(text, "name"), field="name")
    try:
        traj = Trajectory(tuple(waypoints), interpolation,
                          number(doc, "rate", "", text, 1000.0),
                          number(doc, "speed", "", text, 10.0), name)
        grasp = None
        if "grasp" in doc:
            g = doc["grasp"]
            base = GraspModel()
            grasp = GraspModel(number(g, "grip_distance", "grasp", text, base.grip_distance),
                               number(g, "k_linear", "grasp", text, base.k_linear),
                               number(g, "k_rotational", "grasp", text, base.k_rotational),
                               number(g, "slip_threshold", "grasp", text, base.slip_threshold))
    except ValueError as exc:
        raise RangeError(str(exc)) from None
    return traj, grasp


def with_rate(traj: Trajectory, rate: float) -> Trajectory:
    return Trajectory(traj.waypoints, traj.interpolation, rate, traj.speed, traj.name)
