"""Exception taxonomy shared by all modules."""


class VfheatError(Exception):
    """Base class for every error raised by this package."""


class NonFinite(VfheatError):
    """An integrand or callable produced a NaN or infinity."""


class SubdivisionLimit(VfheatError):
    """Adaptive quadrature could not meet tolerance within the panel budget."""


class BracketInvalid(VfheatError):
    """Root bracket does not contain the requested target value."""


class NotPositive(VfheatError):
    """A coefficient or density failed the strict positivity check."""


class DerivativeMismatch(VfheatError):
    """Supplied derivative disagrees with finite differences of the value."""


class IndexOutOfRange(VfheatError):
    """A plateau index beyond the materialized cutoff was requested."""


class OutOfMaterializedRange(VfheatError):
    """Evaluation point lies beyond the materialized part of the coefficient."""


class WindowExceeded(VfheatError):
    """A flow target or integration range leaves the materialized window."""


class ResolutionInsufficient(VfheatError):
    """The sampling grid cannot resolve the requested fine structure."""


class ConfigInvalid(VfheatError):
    """A run configuration or JSON coefficient spec failed validation."""
