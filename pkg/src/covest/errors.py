"""Exception hierarchy shared by every covest module."""


class CovestError(Exception):
    """Base class for all library errors."""


class DimensionError(CovestError, ValueError):
    """Operand shapes do not fit together."""


class ValidationError(CovestError, ValueError):
    """An input object violates one of its declared invariants."""


class InfeasibleError(CovestError, ValueError):
    """A normalization constraint cannot be met (e.g. a vanishing operator)."""


class NumericalDegeneracyError(CovestError, RuntimeError):
    """A numerical routine could not reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnsupportedError(CovestError, NotImplementedError):
    """The requested operation is not defined for this kind of input."""
