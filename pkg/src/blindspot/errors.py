"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called outside its documented contract."""


class FrameMismatch(ContractViolation):
    """A point cloud arrived in a different frame than the operation expects."""


class ScenarioError(ValueError):
    """Scene/actor data is inconsistent (e.g. a trajectory gap)."""


class ConfigError(ValueError):
    """A scenario configuration file failed to parse or validate.

    ``field`` names the offending key path when known.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(message if field is None else f"{field}: {message}")


class CloudFormatError(ValueError):
    """A point-cloud file is malformed; carries the byte offset or line number."""

    def __init__(self, message: str, *, line: int | None = None, offset: int | None = None):
        self.line = line
        self.offset = offset
        where = ""
        if line is not None:
            where = f" (line {line})"
        elif offset is not None:
            where = f" (byte offset {offset})"
        super().__init__(message + where)


class NumericError(ArithmeticError):
    """An iterative numeric routine failed to converge."""
