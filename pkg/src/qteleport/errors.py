"""Exception types shared across the package.

Everything derives from ValueError so callers that do not care about the
distinction can catch a single base class.
"""


class QTeleportError(ValueError):
    """Base class for all errors raised by this package."""


class CapacityError(QTeleportError):
    """A requested object would exceed a configured size cap."""


class ShapeError(QTeleportError):
    """Array dimensions are inconsistent with the requested operation."""


class PositivityError(QTeleportError):
    """An operator that must be positive semidefinite is not."""


class NormalizationError(QTeleportError):
    """A state or distribution is not normalized within tolerance."""


class SingularChannelError(QTeleportError):
    """The channel has a vanishing Schmidt coefficient, so the dual basis
    (and with it the conclusive protocol) does not exist."""


class DomainError(QTeleportError):
    """A scalar argument lies outside the formula's domain."""


class DecompositionError(QTeleportError):
    """An operator needs a rank-one decomposition that was not supplied."""


class ConsistencyError(QTeleportError):
    """An internal consistency check failed during simulation."""
