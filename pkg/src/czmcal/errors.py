"""Exception types shared across the package."""


class CZMError(Exception):
    """Base class for package errors."""


class ConfigError(CZMError, ValueError):
    """Invalid run configuration."""


class DataError(CZMError, ValueError):
    """Malformed or inconsistent observation data."""


class NumericalError(CZMError, FloatingPointError):
    """A computation produced non-finite values or could not proceed."""
