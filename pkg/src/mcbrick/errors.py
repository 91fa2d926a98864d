"""Exception types shared across the package.

The CLI maps these to exit codes: ParameterError and its subclasses mean the
request itself was malformed (exit 2), CapacityError and RefusalError mean a
well-formed request was refused at runtime (exit 3).
"""


class McbrickError(Exception):
    pass


class ParameterError(McbrickError):
    """Invalid or inconsistent input parameters."""


class StructureError(ParameterError):
    """A matrix does not have the required magnetization-conserving shape."""


class SymmetryError(ParameterError):
    """An operator fails a required symmetry check."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(ParameterError):
    """Bad config file: unknown keys, missing values, wrong types."""


class CapacityError(McbrickError):
    """Request exceeds the supported desk-scale problem size."""


class RefusalError(McbrickError):
    """A computation that is well posed but refused for structural reasons."""


class TimeReversalRefusal(RefusalError):
    """Periodic circuit without the fine-tuned angle sum; carries the defect."""

    def __init__(self, message, angle_defect):
        super().__init__(message)
        self.angle_defect = angle_defect


class CriticalManifoldError(RefusalError):
    """Gate sits on the critical manifold where both parametrizations degenerate."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}
