"""Exception types raised by sqlab."""


class SqlabError(Exception):
    """Base class for all sqlab errors."""


class UnsupportedConfigurationError(SqlabError, ValueError):
    """A basis/boundary combination that is not implemented (e.g. mixed BC in 2D)."""


class GridMismatchError(SqlabError, ValueError):
    pass


class NumericalDegeneracyError(SqlabError, FloatingPointError):
    """Importance weights vanished or overflowed."""


class DivergenceError(SqlabError, FloatingPointError):
    """A simulated state became non-finite."""

    def __init__(self, message, mode=None):
        super().__init__(message)
        self.mode = mode


class RefinementError(SqlabError, ValueError):
    """A truncation is too coarse for the requested accuracy."""


class ConfigError(SqlabError, ValueError):
    """Malformed or inconsistent scenario configuration."""
