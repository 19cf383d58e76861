"""Exception types raised across the package."""


class SpindleBoundsError(Exception):
    """Base class for all errors raised by ``spindle_bounds``."""


class ConfigurationError(SpindleBoundsError, ValueError):
    """Raised when a learner, problem or experiment is configured with invalid values."""


class DimensionError(SpindleBoundsError, ValueError):
    """Raised when tensor shapes do not line up."""


class CapacityError(SpindleBoundsError, MemoryError):
    """Raised when a requested construction exceeds the configured memory cap."""


class DivergenceError(SpindleBoundsError, ArithmeticError):
    """Raised when training weights blow up or become non-finite."""
