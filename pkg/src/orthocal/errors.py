"""Exception hierarchy. CLI exit codes are keyed on these classes."""


class OrthocalError(Exception):
    """Base class for all toolkit errors."""


class KinematicsError(OrthocalError):
    pass


class Unreachable(KinematicsError):
    def __init__(self, axis: str, radicand: float):
        self.axis = axis
        self.radicand = radicand
        super().__init__(f"TCP unreachable for {axis}-leg (radicand {radicand:.6g} mm^2)")


class SingularAxis(KinematicsError):
    def __init__(self, axis: str):
        self.axis = axis
        super().__init__(f"actuated coordinate of {axis}-axis is zero")


class Unassemblable(KinematicsError):
    def __init__(self, discriminant: float):
        self.discriminant = discriminant
        super().__init__(f"no assembly for these joint values (discriminant {discriminant:.6g})")


class SingularPosture(KinematicsError):
    def __init__(self, axis: str):
        self.axis = axis
        super().__init__(f"posture is singular: p_{axis} equals the actuated {axis} coordinate")


class SchemaError(OrthocalError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class UnitError(SchemaError):
    pass


class IncompleteSession(OrthocalError):
    def __init__(self, missing: list[tuple[str, str, str]], detail: str = ""):
        self.missing = missing
        listed = ", ".join(f"{leg}/{axis}/{posture}" for leg, axis, posture in missing)
        msg = f"missing readings for {listed}" if missing else "inconsistent session"
        if detail:
            msg = f"{msg}; {detail}" if missing else detail
        super().__init__(msg)


class DegenerateGeometry(OrthocalError):
    pass


class FormMismatch(OrthocalError):
    pass


class EmptyInput(OrthocalError):
    pass
