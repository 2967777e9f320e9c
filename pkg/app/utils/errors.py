"""Exceptions raised by the workbench.

Each error carries a short code so that the command line can emit the same
``{"error": {"code": ..., "message": ...}}`` payload for every failure.
"""


class WorkbenchError(Exception):
    code = "WORKBENCH_ERROR"

    def __init__(self, message):
        super().__init__(message)
        self.message = message

    def to_dict(self):
        return {"error": {"code": self.code, "message": self.message}}


class DomainError(WorkbenchError):
    """A parameter lies outside the domain of the operation."""

    code = "DOMAIN_ERROR"


class ConfigError(WorkbenchError):
    """A run configuration is invalid or incomplete."""

    code = "CONFIG_ERROR"


class ShapeError(WorkbenchError):
    """Two grid objects do not live on the same grid."""

    code = "SHAPE_ERROR"


class NumericalError(WorkbenchError):
    """A computation left its numerically safe range."""

    code = "NUMERICAL_ERROR"


class InvariantError(WorkbenchError):
    """A constructed object violates one of its invariants."""

    code = "INVARIANT_ERROR"
