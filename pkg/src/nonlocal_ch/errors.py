"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid grid, parameter, schedule or config-file content."""


class ShapeError(ValueError):
    """A field does not match the grid it is used with."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operator."""


class ModelError(ValueError):
    """Model parameters violate a well-posedness condition of the kernel."""


class DivergenceError(RuntimeError):
    """The time integration produced non-finite or runaway values.

    ``t`` is the last time at which the solution was still valid and
    ``linf`` the sup-norm of the offending field.
    """

    def __init__(self, message, t=None, linf=None):
        super().__init__(message)
        self.t = t
        self.linf = linf
        self.records = []
        self.snapshots = {}
