"""Exception types shared across the package.

The CLI maps these onto stable exit codes: configuration problems exit 2,
data problems exit 3, I/O problems exit 4.
"""

from __future__ import annotations


class EditionerError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EditionerError):
    """Invalid parameter, flag, or configuration value."""


class DimError(ConfigError):
    """Dimension mismatch between an input and the space it is used in."""


class DataError(EditionerError):
    """Numerically invalid data (NaN/Inf, zero norms, too few rows)."""

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        super().__init__(message)
        self.row = row
        self.col = col


class DegenerateError(DataError):
    """A construction that would select the whole working space."""


class OrthogonalInputError(DataError):
    """Input essentially orthogonal to the target subspace."""


class FormatError(EditionerError):
    """Malformed or unsupported file content."""


class IntegrityError(EditionerError):
    """A stored artifact fails its internal consistency checks."""


class IoError(EditionerError):
    """Underlying I/O failure while reading or writing an artifact."""
