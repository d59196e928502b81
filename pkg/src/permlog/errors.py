"""Exception hierarchy shared by all permlog modules."""


class PermlogError(Exception):
    """Base class for all errors raised by this package."""


class SizeLimitExceeded(PermlogError):
    """Instance is larger than the configured exact-evaluation limit."""


class BudgetExceeded(PermlogError):
    """An enumeration or degree budget would be exceeded."""


class ShapeMismatch(PermlogError):
    """Input shape is incompatible with the requested operation or region."""


class RegionViolation(PermlogError):
    """Input lies outside the region required by an approximation pipeline.

    Carries the MembershipReport (when one was produced) as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class EtaTooLarge(PermlogError):
    """eta is at or beyond the admissible maximum for the requested bound."""


class ZeroBaseValue(PermlogError):
    """g(0) vanished; the logarithmic conversion is undefined."""


class BetaNotGreaterThanOne(PermlogError):
    """The truncation error bound requires beta > 1."""


class RhoOutOfRange(PermlogError):
    """rho must lie in (0, 1]."""


class NonzeroInnerConstant(PermlogError):
    """Truncated composition requires the inner polynomial to vanish at 0."""


class DegreeExceedsN(PermlogError):
    """Polynomial degree exceeds the declared n of a Schur product."""


class InfeasibleParameters(PermlogError):
    """No admissible parameter choice exists for the requested pipeline."""
