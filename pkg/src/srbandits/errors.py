"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value. ``path`` names the offending field when known."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class PlacementError(RuntimeError):
    """Random placement could not satisfy its constraints within the retry budget."""


class GeometryError(ValueError):
    """Degenerate geometry, e.g. a co-located interferer."""


class NumericalError(RuntimeError):
    """A non-finite value appeared where finite values are required."""
