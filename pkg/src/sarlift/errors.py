"""Exception types shared across the package."""


class SarliftError(Exception):
    """Base class for all package-specific errors."""


class InvalidConfigError(SarliftError, ValueError):
    """A configuration value or file is invalid."""


class OutOfRangeError(SarliftError, ValueError):
    """A parameter lies outside its admissible interval."""


class DegenerateGeometryError(SarliftError, ValueError):
    """The imaging geometry makes the requested quantity undefined."""


class DimensionError(SarliftError, ValueError):
    """Array shapes are inconsistent."""


class MemoryBudgetError(SarliftError, RuntimeError):
    """Assembling an explicit operator would exceed the memory budget."""


class EigendecompositionError(SarliftError, RuntimeError):
    """An eigendecomposition failed; carries condition diagnostics."""


class DivergenceError(SarliftError, RuntimeError):
    """The iterative solver is diverging; carries the history so far."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class DegenerateStationaryPointError(SarliftError, RuntimeError):
    """A stationary point has (numerically) vanishing second derivative."""
