"""Exceptions raised by kpmperf.

Argument problems stay :obj:`ValueError` subclasses so callers that only know
about ``ValueError`` keep working.
"""


class KpmError(Exception):
    """Base class for kpmperf errors."""


class SizingError(KpmError, ValueError):
    """Problem too large for the index type or for available memory."""


class ShapeError(KpmError, ValueError):
    """Operands with incompatible dimensions."""


class VerificationError(KpmError):
    """A verification check failed."""
