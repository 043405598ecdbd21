"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented codes (1 runtime, 3 parse/schema, 4 slip abort, 5 divergence)
without a lookup table.
"""


class ShoulderTwinError(Exception):
    exit_code = 1


class InvalidLimits(ShoulderTwinError, ValueError):
    """A goniometer maximum is non-finite or outside its allowed range."""


class DegenerateCone(ShoulderTwinError, ValueError):
    """Boundary points coincide, or no interior visible point exists."""


class OutOfRange(ShoulderTwinError, ValueError):
    """Humeral angle outside the span covered by a cone family."""


class NeverActivates(ShoulderTwinError):
    """A sweep path never leaves the reach cone."""


class ResolutionMismatch(ShoulderTwinError, ValueError):
    pass


class SlipEvent(ShoulderTwinError):
    """Grasp force exceeded the slip threshold (raised only when aborting on slip)."""

    exit_code = 4

    def __init__(self, message: str, time: float, force: float):
        super().__init__(message)
        self.time = time
        self.force = force


class SimulationDiverged(ShoulderTwinError):
    exit_code = 5


class ProfileError(ShoulderTwinError):
    exit_code = 3


class ParseError(ProfileError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field


class SchemaError(ProfileError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class RangeError(ProfileError, ValueError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
