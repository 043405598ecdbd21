"""Command-line front end.

Exit codes: 0 ok, 1 runtime error, 2 usage error, 3 profile/trajectory
parse or schema error, 4 simulation aborted on grasp slip, 5 simulation
diverged.  Errors print one line on stderr: ``error: <Kind>: <message>``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .anatomy import build_reach_cone, cone_to_text
from .coupling import activation_onset, cone_at, family_for_profile
from .cspace import (WEIGHTINGS, compare, exact_coverage, fit_device_limits, format_summary,
                     rasterize, write_pgm)
from .errors import ShoulderTwinError
from .haptics import TendonModel, render_torque, tendon_comparison
from .harness import GraspModel, load_trajectory, run_trajectory, with_rate
from .kinematics import JointPose, arm_direction, detect_singularity, joint_axes, serial_sphere_deviation
from .limits import closest_surface_rotation, point_in_cone
from .profiles import dump_subject_profile, resolve_profile

BUILTIN_TRAJECTORIES = ("abduction_sweep", "excursion", "interior_hold")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _n_points(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 4 or n % 4:
        raise argparse.ArgumentTypeError(f"n-points must be >= 4 and divisible by 4, got {n}")
    return n


def _resolution(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}") from None
    if a < 16 or b < 16:
        raise argparse.ArgumentTypeError("resolution must be at least 16x16")
    return a, b


def _rate(text: str) -> float:
    try:
        r = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 100.0 <= r <= 10000.0:
        raise argparse.ArgumentTypeError("rate must lie in [100, 10000] Hz")
    return r


def _write(out: str | None, name: str, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text, newline="\n")


def _emit(args, stem: str, record: dict | list) -> None:
    rows = record if isinstance(record, list) else [record]
    if args.format == "json":
        text = json.dumps(record, indent=2, sort_keys=True) + "\n"
        _write(args.out, f"{stem}.json", text)
        return
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    keys = list(rows[0])
    writer.writerow(keys)
    for row in rows:
        writer.writerow([repr(row[k]) if isinstance(row[k], float) else row[k] for k in keys])
    _write(args.out, f"{stem}.csv", buf.getvalue())


def _model(args, profile):
    if getattr(args, "model", None) is None:
        return None
    return TendonModel.linear(profile.spring.k_linear) if args.model == "linear" else TendonModel.quadratic()


def cmd_build_cone(args) -> int:
    profile = resolve_profile(args.profile)
    n = args.n_points or profile.n_points
    if args.gamma is None:
        cone = build_reach_cone(profile.limits, n, profile.interpolation)
    else:
        cone = cone_at(family_for_profile(profile), args.gamma)
    _write(args.out, "cone.txt", cone_to_text(cone))
    return 0


def cmd_check_pose(args) -> int:
    profile = resolve_profile(args.profile)
    pose = JointPose.from_degrees(args.flexion, args.abduction, args.humeral)
    if args.gamma is None:
        cone = profile.reach_cone()
    else:
        cone = cone_at(family_for_profile(profile), args.gamma)
    result = point_in_cone(cone, arm_direction(pose))
    error = closest_surface_rotation(cone, result, axes=joint_axes(pose))
    model = _model(args, profile) or profile.spring
    cmd = render_torque(pose, error, model, profile.damping_b, profile.torque_ceiling)
    e = [math.degrees(x) for x in error.per_axis_error_theta_e]
    _emit(args, "pose", {
        "inside": result.inside, "wedge": result.wedge_index, "d": result.signed_distance_d,
        "phi_deg": math.degrees(error.rotation_angle_phi),
        "error_flexion_deg": e[0], "error_abduction_deg": e[1], "error_humeral_deg": e[2],
        "tau_flexion": cmd.tau[0], "tau_abduction": cmd.tau[1], "tau_humeral": cmd.tau[2],
        "regime": cmd.regime, "near_singularity": detect_singularity(pose)})
    return 0


def cmd_cspace(args) -> int:
    a = resolve_profile(args.profile)
    b = resolve_profile(args.profile_b or args.profile)
    weightings = WEIGHTINGS if args.weighting == "both" else (args.weighting,)
    cone_a, cone_b = a.reach_cone(), b.reach_cone()
    grid_a, grid_b = rasterize(cone_a, args.resolution), rasterize(cone_b, args.resolution)
    reports = []
    for w in weightings:
        rep = compare(grid_a.with_weighting(w), grid_b.with_weighting(w))
        reports.append(rep)
        if args.out:
            _write(args.out, f"summary_{w}.txt", format_summary(rep, (a.name, b.name), args.resolution))
    if args.out:
        write_pgm(grid_a, Path(args.out) / f"mask_{a.name}.pgm")
        if b.name != a.name:
            write_pgm(grid_b, Path(args.out) / f"mask_{b.name}.pgm")
    record = [dict(rep.as_dict(), profile_a=a.name, profile_b=b.name,
                   exact_a=exact_coverage(cone_a), exact_b=exact_coverage(cone_b)) for rep in reports]
    _emit(args, "cspace", record)
    return 0


def cmd_tendon_curve(args) -> int:
    k = resolve_profile(args.profile).spring.k_linear if args.profile else TendonModel().k_linear
    cmp = tendon_comparison(args.range, k)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["theta_deg", "ideal", "linear", "quadratic"])
    for row in zip(cmp["theta"], cmp["reference"], cmp["linear"], cmp["quadratic"]):
        writer.writerow([repr(float(x)) for x in row])
    summary = {"range_deg": args.range, "rmse_linear": cmp["rmse_linear"],
               "rmse_quadratic": cmp["rmse_quadratic"]}
    if args.model:
        summary["rmse_model"] = cmp[f"rmse_{args.model}"]
    if args.out:
        _write(args.out, "tendon_curve.csv", buf.getvalue())
        _write(args.out, "tendon_rmse.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return 0


def _trajectory_text(source: str) -> str:
    if source in BUILTIN_TRAJECTORIES:
        return resources.files("shouldertwin").joinpath("data", "trajectories", f"{source}.toml").read_text()
    return Path(source).read_text()


def cmd_simulate(args) -> int:
    profile = resolve_profile(args.profile)
    traj, grasp = load_trajectory(_trajectory_text(args.trajectory))
    if args.rate:
        traj = with_rate(traj, args.rate)
    if grasp is None:
        grasp = GraspModel(grip_distance=profile.upper_arm_length_r)
    if args.grip is not None or args.slip_threshold is not None:
        grasp = GraspModel(args.grip if args.grip is not None else grasp.grip_distance,
                           grasp.k_linear, grasp.k_rotational,
                           args.slip_threshold if args.slip_threshold is not None else grasp.slip_threshold)
    log = run_trajectory(profile, family_for_profile(profile), traj, grasp, passive=args.passive,
                         model=_model(args, profile), noise=(args.noise_force, args.noise_torque),
                         seed=args.seed, abort_on_slip=args.abort_on_slip)
    stem = traj.name + ("_passive" if args.passive else "")
    if args.out:
        log.write(args.out, stem)
    else:
        sys.stdout.write(log.to_csv())
    return 0


def cmd_fit_device(args) -> int:
    from .anatomy import SubjectProfile

    human = resolve_profile(args.profile)
    limits, report = fit_device_limits(human.reach_cone(), resolution=args.resolution)
    device = SubjectProfile(limits, name="device", humeral_rotation_range=human.humeral_rotation_range)
    _write(args.out, "device.toml", dump_subject_profile(device))
    if args.out:
        _write(args.out, "fit_report.txt", format_summary(report, (human.name, "device"), args.resolution))
    return 0


def cmd_onset(args) -> int:
    profile = resolve_profile(args.profile)
    family = family_for_profile(profile)
    gammas = args.gamma if args.gamma else list(np.arange(family.span[0], family.span[1] + 1e-9, 5.0))
    rows = [{"gamma_deg": float(g), "onset_deg": activation_onset(family, float(g))} for g in gammas]
    _emit(args, "onset", rows)
    return 0


def cmd_serial_deviation(args) -> int:
    r = args.length
    _emit(args, "serial_deviation", {"link_length_m": r,
                                     "max_radial_deviation_m": serial_sphere_deviation(r, steps=args.steps)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shouldertwin", description="Shoulder haptic twin tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, fmt=True):
        p.add_argument("--profile", default="human", help="built-in name (human, device) or TOML path")
        p.add_argument("--out", help="output directory (default: stdout)")
        p.add_argument("--seed", type=int, default=0)
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        return p

    p = common(sub.add_parser("build-cone", help="write a reach cone artifact"), fmt=False)
    p.add_argument("--n-points", type=_n_points)
    p.add_argument("--gamma", type=float, help="humeral rotation (deg) for a coupled cone")
    p.set_defaults(func=cmd_build_cone)

    p = common(sub.add_parser("check-pose", help="classify one pose and render its torque"))
    p.add_argument("flexion", type=float)
    p.add_argument("abduction", type=float)
    p.add_argument("humeral", type=float, nargs="?", default=0.0)
    p.add_argument("--gamma", type=float)
    p.add_argument("--model", choices=("linear", "quadratic"))
    p.set_defaults(func=cmd_check_pose)

    p = common(sub.add_parser("cspace", help="coverage and overlap of two profiles"))
    p.add_argument("--profile-b")
    p.add_argument("--resolution", type=_resolution, default=(360, 180))
    p.add_argument("--weighting", choices=(*WEIGHTINGS, "both"), default="both")
    p.set_defaults(func=cmd_cspace)

    p = common(sub.add_parser("tendon-curve", help="ideal, linear and quadratic tendon curves"), fmt=False)
    p.add_argument("--range", type=float, default=20.0, help="sweep range in degrees")
    p.add_argument("--model", choices=("linear", "quadratic"))
    p.set_defaults(func=cmd_tendon_curve, profile=None)

    p = common(sub.add_parser("simulate", help="run a trajectory through the harness"), fmt=False)
    p.add_argument("--trajectory", default="abduction_sweep",
                   help=f"built-in ({', '.join(BUILTIN_TRAJECTORIES)}) or TOML path")
    p.add_argument("--rate", type=_rate)
    p.add_argument("--passive", action="store_true", help="disable the virtual tendons, keep damping")
    p.add_argument("--model", choices=("linear", "quadratic"))
    p.add_argument("--noise-force", type=float, default=0.0, help="sensor force noise sigma (N)")
    p.add_argument("--noise-torque", type=float, default=0.0, help="sensor torque noise sigma (N*cm)")
    p.add_argument("--grip", type=float, help="grip distance from the joint centre (m)")
    p.add_argument("--slip-threshold", type=float)
    p.add_argument("--abort-on-slip", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("fit-device", help="fit device limits to the target coverage"), fmt=False)
    p.add_argument("--resolution", type=_resolution, default=(360, 180))
    p.set_defaults(func=cmd_fit_device)

    p = common(sub.add_parser("onset", help="activation onset along pure abduction"))
    p.add_argument("--gamma", type=float, action="append")
    p.set_defaults(func=cmd_onset)

    p = common(sub.add_parser("serial-deviation", help="radial drift of the serial comparison chain"))
    p.add_argument("--length", type=float, default=0.15, help="link length (m)")
    p.add_argument("--steps", type=int, default=18)
    p.set_defaults(func=cmd_serial_deviation)
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    one_line = " ".join(str(message).split())
    sys.stderr.write(f"error: {kind}: {one_line}\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", exc, 2)
    if getattr(args, "noise_force", 0.0) < 0 or getattr(args, "noise_torque", 0.0) < 0:
        return _fail("usage", "noise sigma must be >= 0", 2)
    try:
        return args.func(args)
    except ShoulderTwinError as exc:
        return _fail(type(exc).__name__, exc, exc.exit_code)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(type(exc).__name__, exc, 1)


if __name__ == "__main__":
    sys.exit(main())
