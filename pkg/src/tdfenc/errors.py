"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError (and its
subclasses) -> 2, OSError -> 3.
"""


class TdfError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(TdfError, ValueError):
    """Malformed or internally inconsistent configuration input."""


class DataError(TdfError, ValueError):
    """Invalid data content, incompatible shapes, or mismatched models."""


class FormatError(DataError):
    """Unreadable, unsupported, or corrupt serialized artifact."""


class ManifestError(DataError):
    """Malformed dataset manifest."""
