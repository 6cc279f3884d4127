"""Exception and warning types shared across the package."""


class KernRankError(Exception):
    """Base class for all library errors."""


class DimensionError(KernRankError):
    """Dimension / hypersurface-dimension arguments are inconsistent."""


class GeometryError(KernRankError):
    """Boxes violate a geometric precondition (overlap, containment, ...)."""


class AmbiguousSeparationError(GeometryError):
    """Boxes are separated but by less than one box width: neither
    neighbors nor far-field under the eta = 1 criterion."""


class NoSubdivisionNeeded(KernRankError):
    """Far-field pairs are compressed in one shot; there is no tree."""


class SingularEvaluationError(KernRankError):
    """Kernel evaluated at zero distance where it is singular."""


class NumericalError(KernRankError):
    """A non-finite value appeared where a finite one is required."""


class DistributionError(KernRankError):
    """Invalid probability parameter or unsupported marginal."""


class DegenerateNormError(KernRankError):
    """Relative error against an (almost) zero matrix is undefined."""


class FitError(KernRankError):
    """Growth-law fit cannot be performed on the given statistics."""


class NotApplicableError(KernRankError):
    """Operation does not apply to this interaction kind."""


class DomainError(KernRankError):
    """Argument outside the mathematical domain of a formula."""


class LowCountWarning(UserWarning):
    """Normal approximation requested where n*q or n*(1-q) is small."""
