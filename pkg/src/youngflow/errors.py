"""Exception hierarchy shared by all youngflow modules."""


class YoungflowError(Exception):
    """Base class for every error raised by this package."""


class DomainError(YoungflowError, ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class RangeError(YoungflowError, ValueError):
    """A time or interval is off-grid or outside the covered domain."""


class ShapeError(YoungflowError, ValueError):
    """Two paths or arrays do not share the required grid or dimension."""


class ResourceError(YoungflowError, MemoryError):
    """A requested grid exceeds a hard size limit."""


class DivergenceError(YoungflowError, ArithmeticError):
    """A numerical state became non-finite."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NearZeroError(YoungflowError, ArithmeticError):
    """A norm fell below the floor where a log/polar identity degenerates."""


class SolvabilityError(YoungflowError, ValueError):
    """A matrix equation has no (unique) solution for the given data."""


class TransformError(YoungflowError, ValueError):
    """A coordinate transform could not be constructed."""
