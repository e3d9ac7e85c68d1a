"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: config/schema problems exit 2, data
problems exit 3, numeric failures exit 4.
"""


class FairsiamError(Exception):
    """Base class for all package errors."""


class SchemaError(FairsiamError):
    """Schema declaration is invalid or does not match the data."""


class ConfigError(FairsiamError):
    """A runtime configuration value is out of contract."""


class DataError(FairsiamError):
    """Input data cannot be parsed or is unusable (empty, bad token, ...)."""


class NumericError(FairsiamError):
    """Training or evaluation produced a non-finite quantity."""
