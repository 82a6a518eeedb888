"""Exception hierarchy.

Numerical failures (``NumericalFailure`` subclasses) map to CLI exit code 3;
bad input maps to exit code 1.
"""


class LDPError(Exception):
    """Base class for all package errors."""


class UnknownFamily(LDPError, KeyError):
    pass


class BadParam(LDPError, ValueError):
    pass


class NumericalFailure(LDPError):
    """A computation could not produce a trustworthy value."""


class WindowTooSmall(NumericalFailure):
    pass


class Unstable(NumericalFailure):
    pass


class DegenerateDiffusion(NumericalFailure):
    pass


class BandwidthTooSmall(NumericalFailure):
    pass


class ZeroHits(NumericalFailure):
    pass


class Infeasible(LDPError):
    """The constraint set of a variational problem is empty (value is +inf)."""


class NotDegenerate(LDPError, ValueError):
    pass
