"""Exception types raised across the package."""


class InvalidSpecError(ValueError):
    """A grid/basis specification violates its invariants."""


class InvalidArgumentError(ValueError):
    """An argument is out of range or has the wrong shape."""


class DegenerateGeometryError(ValueError):
    """Geometry is too degenerate to define a frame or length."""


class DegenerateInputError(ValueError):
    """Input carries no usable signal (e.g. no positive eigenvalues)."""


class EmptyDesignError(RuntimeError):
    """A decoded design has no occupied elements."""


class SimulationDivergedError(RuntimeError):
    """The integrator produced non-finite state."""


class ConfigError(ValueError):
    """An experiment config failed schema validation."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
