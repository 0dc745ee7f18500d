class DynsyncError(Exception):
    """Base class for library errors."""


class DimensionError(DynsyncError, ValueError):
    pass


class DenseCapError(DynsyncError):
    """A dense operation would exceed the configured dimension cap."""


class NumericalError(DynsyncError):
    """Raised when a computation violates a physical invariant (e.g. positivity)."""


class TrackingAmbiguityError(DynsyncError):
    pass


class ConfigError(DynsyncError, ValueError):
    pass
