"""Exception hierarchy."""


class MlSelectError(Exception):
    """Base class for all mlselect errors."""


class DataError(MlSelectError):
    """Malformed dataset, schema mismatch, or row misalignment."""


class ConfigError(MlSelectError):
    """Invalid job configuration."""
