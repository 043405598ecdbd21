"""Subject profile files (TOML).

Layout::

    name = "human"

    [limits]                  # required, degrees from neutral
    flexion_max = 160.0
    extension_max = 49.0
    abduction_max = 174.0
    adduction_max = 0.0

    [humeral]                 # degrees of medial and lateral rotation
    medial = 63.0
    lateral = 92.0

    [arm]                     # metres
    upper_arm_length = 0.30
    moment_arm = 0.0154

    [cone]
    n_points = 64
    interpolation = "linear"  # or "ellipse"

    [haptics]
    damping = 0.35            # N*m*s/rad
    model = "quadratic"       # or "linear"
    k_linear = 0.072          # N*cm/deg
    quad_coeffs = [-0.002, 0.081, -0.093]
    k_clamp = [0.0, 0.243]
    torque_ceiling = 5.0      # N*cm per axis
    belt_ratio = 3.33

    [haptics.humeral]         # optional per-axis override (flexion/abduction/humeral)
    model = "linear"

    [coupling]
    interpolation = "slerp"   # or "nearest"
    rows = [[-50.0, 160.0, 49.0, 90.0, 0.0], [80.0, 160.0, 49.0, 165.0, 0.0]]

Every section except ``[limits]`` is optional.  Unknown keys are errors.
"""

from __future__ import annotations

import math
import re
from importlib import resources
from pathlib import Path

import tomli

from .anatomy import GoniometerLimits, SubjectProfile
from .errors import InvalidLimits, ParseError, RangeError, SchemaError
from .haptics import TendonModel

BUILTIN_PROFILES = {"human": "human.toml", "device": "device.toml"}

_LIMIT_KEYS = ("flexion_max", "extension_max", "abduction_max", "adduction_max")
_SPRING_KEYS = {"model", "k_linear", "quad_coeffs", "k_clamp"}
_AXES = ("flexion", "abduction", "humeral")
_SCHEMA = {
    "": {"name", "limits", "humeral", "arm", "cone", "haptics", "coupling"},
    "limits": set(_LIMIT_KEYS),
    "humeral": {"medial", "lateral"},
    "arm": {"upper_arm_length", "moment_arm"},
    "cone": {"n_points", "interpolation"},
    "haptics": {"damping", "torque_ceiling", "belt_ratio", *_SPRING_KEYS, *_AXES},
    "coupling": {"interpolation", "rows"},
}


def _line_of(text: str, key: str) -> int | None:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=", re.MULTILINE)
    m = pattern.search(text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def parse_toml(text: str) -> dict:
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ParseError(str(exc).split(" (at")[0], line=int(m.group(1)) if m else None) from None


def check_keys(doc: dict, schema: dict, text: str = "") -> None:
    for section, allowed in schema.items():
        table = doc if section == "" else doc.get(section, {})
        if not isinstance(table, dict):
            raise SchemaError("expected a table", field=section)
        for key in table:
            if key not in allowed:
                dotted = key if section == "" else f"{section}.{key}"
                raise SchemaError(f"unknown key (line {_line_of(text, key)})", field=dotted)


def number(table: dict, key: str, section: str, text: str, default=None) -> float:
    dotted = f"{section}.{key}" if section else key
    if key not in table:
        if default is None:
            raise SchemaError("missing required field", field=dotted)
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError("expected a number", line=_line_of(text, key), field=dotted)
    return float(value)


def _string(table, key, section, text, default, choices):
    value = table.get(key, default)
    if not isinstance(value, str) or value not in choices:
        raise ParseError(f"expected one of {sorted(choices)}", line=_line_of(text, key),
                         field=f"{section}.{key}")
    return value


def _number_list(table, key, section, text, default, length):
    value = table.get(key, default)
    if (not isinstance(value, (list, tuple)) or len(value) != length
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)):
        raise ParseError(f"expected a list of {length} numbers", line=_line_of(text, key),
                         field=f"{section}.{key}")
    return tuple(float(v) for v in value)


def _spring(table: dict, section: str, text: str, base: TendonModel) -> TendonModel:
    try:
        return TendonModel(
            kind=_string(table, "model", section, text, base.kind, {"linear", "quadratic"}),
            k_linear=number(table, "k_linear", section, text, base.k_linear),
            quad_coeffs=_number_list(table, "quad_coeffs", section, text, base.quad_coeffs, 3),
            k_clamp=_number_list(table, "k_clamp", section, text, base.k_clamp, 2))
    except ValueError as exc:
        raise RangeError(str(exc), field=section) from None


def load_subject_profile(text: str) -> SubjectProfile:
    """Parse and validate a profile document."""
    doc = parse_toml(text)
    check_keys(doc, _SCHEMA, text)
    for axis in _AXES:
        sub = doc.get("haptics", {}).get(axis)
        if sub is not None:
            check_keys({axis: sub}, {axis: _SPRING_KEYS}, text)
    if "limits" not in doc:
        raise SchemaError("missing required section", field="limits")
    lim_t = doc["limits"]
    values = [number(lim_t, k, "limits", text) for k in _LIMIT_KEYS]
    try:
        limits = GoniometerLimits(*values)
    except InvalidLimits as exc:
        field = next((k for k in _LIMIT_KEYS if k in str(exc)), None)
        raise RangeError(str(exc), field=f"limits.{field}" if field else "limits") from None

    name = doc.get("name", "subject")
    if not isinstance(name, str):
        raise ParseError("expected a string", line=_line_of(text, "name"), field="name")
    hum = doc.get("humeral", {})
    arm = doc.get("arm", {})
    cone = doc.get("cone", {})
    hap = doc.get("haptics", {})
    cpl = doc.get("coupling", {})
    defaults = SubjectProfile(limits)

    n_points = cone.get("n_points", defaults.n_points)
    if isinstance(n_points, bool) or not isinstance(n_points, int):
        raise ParseError("expected an integer", line=_line_of(text, "n_points"), field="cone.n_points")
    if n_points < 4 or n_points % 4:
        raise RangeError("must be >= 4 and divisible by 4", field="cone.n_points")

    spring = _spring(hap, "haptics", text, defaults.spring)
    axis_springs = tuple((axis, _spring(hap[axis], f"haptics.{axis}", text, spring))
                         for axis in _AXES if axis in hap)

    rows = cpl.get("rows", [])
    if not isinstance(rows, list):
        raise ParseError("expected a list of rows", line=_line_of(text, "rows"), field="coupling.rows")
    coupling = []
    for i, row in enumerate(rows):
        row = _number_list({"rows": row}, "rows", "coupling", text, None, 5)
        try:
            GoniometerLimits(*row[1:])
        except InvalidLimits as exc:
            raise RangeError(str(exc), field=f"coupling.rows[{i}]") from None
        coupling.append(row)
    keys = [r[0] for r in coupling]
    if any(b <= a for a, b in zip(keys, keys[1:])):
        raise RangeError("humeral keys must be strictly increasing", field="coupling.rows")

    try:
        profile = SubjectProfile(
            limits=limits,
            name=name,
            humeral_rotation_range=(number(hum, "medial", "humeral", text, defaults.humeral_rotation_range[0]),
                                    number(hum, "lateral", "humeral", text, defaults.humeral_rotation_range[1])),
            upper_arm_length_r=number(arm, "upper_arm_length", "arm", text, defaults.upper_arm_length_r),
            moment_arm_r_ma=number(arm, "moment_arm", "arm", text, defaults.moment_arm_r_ma),
            damping_b=number(hap, "damping", "haptics", text, defaults.damping_b),
            spring=spring,
            axis_springs=axis_springs,
            torque_ceiling=number(hap, "torque_ceiling", "haptics", text, defaults.torque_ceiling),
            belt_ratio=number(hap, "belt_ratio", "haptics", text, defaults.belt_ratio),
            n_points=n_points,
            interpolation=_string(cone, "interpolation", "cone", text, defaults.interpolation,
                                  {"linear", "ellipse"}),
            coupling=tuple(coupling),
            coupling_interpolation=_string(cpl, "interpolation", "coupling", text,
                                           defaults.coupling_interpolation, {"slerp", "nearest"}),
        )
    except ValueError as exc:
        raise RangeError(str(exc)) from None
    if coupling and (keys[0] > -profile.humeral_rotation_range[0]
                     or keys[-1] < profile.humeral_rotation_range[1]):
        raise RangeError("coupling keys must span the humeral rotation range", field="coupling.rows")
    return profile


def _fmt(x) -> str:
    if isinstance(x, str):
        return '"' + x.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError("cannot serialize non-finite value")
        return repr(x)
    return "[" + ", ".join(_fmt(v) for v in x) + "]"


def _spring_lines(model: TendonModel) -> list[str]:
    return [f"model = {_fmt(model.kind)}", f"k_linear = {_fmt(model.k_linear)}",
            f"quad_coeffs = {_fmt(model.quad_coeffs)}", f"k_clamp = {_fmt(model.k_clamp)}"]


def dump_subject_profile(profile: SubjectProfile) -> str:
    """Serialize every field explicitly; floats use ``repr`` so values round-trip exactly."""
    lim = profile.limits
    out = [f"name = {_fmt(profile.name)}", "", "[limits]"]
    out += [f"{k} = {_fmt(float(v))}" for k, v in zip(_LIMIT_KEYS, lim.as_tuple())]
    out += ["", "[humeral]", f"medial = {_fmt(profile.humeral_rotation_range[0])}",
            f"lateral = {_fmt(profile.humeral_rotation_range[1])}",
            "", "[arm]", f"upper_arm_length = {_fmt(profile.upper_arm_length_r)}",
            f"moment_arm = {_fmt(profile.moment_arm_r_ma)}",
            "", "[cone]", f"n_points = {profile.n_points}",
            f"interpolation = {_fmt(profile.interpolation)}",
            "", "[haptics]", f"damping = {_fmt(profile.damping_b)}",
            f"torque_ceiling = {_fmt(profile.torque_ceiling)}",
            f"belt_ratio = {_fmt(profile.belt_ratio)}"]
    out += _spring_lines(profile.spring)
    for axis, model in profile.axis_springs:
        out += ["", f"[haptics.{axis}]"] + _spring_lines(model)
    out += ["", "[coupling]", f"interpolation = {_fmt(profile.coupling_interpolation)}",
            f"rows = {_fmt([list(r) for r in profile.coupling])}"]
    return "\n".join(out) + "\n"


def builtin_profile_text(name: str) -> str:
    return resources.files("shouldertwin").joinpath("data", BUILTIN_PROFILES[name]).read_text()


def resolve_profile(source: str) -> SubjectProfile:
    """Load a built-in profile by name (``human``, ``device``) or a file path."""
    if source in BUILTIN_PROFILES:
        return load_subject_profile(builtin_profile_text(source))
    return load_subject_profile(Path(source).read_text())
