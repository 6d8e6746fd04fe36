"""Exception types raised by dirsim."""


class DirsimError(Exception):
    """Base class for all dirsim errors."""


class NotSymmetric(DirsimError, ValueError):
    pass


class NotPositiveDefinite(DirsimError, ValueError):
    pass


class ConvergenceFailure(DirsimError, ArithmeticError):
    pass


class BoundViolation(DirsimError, ArithmeticError):
    """A proposal exceeded the envelope bound, so the envelope is broken."""


class NoAccepts(DirsimError, ValueError):
    pass


class TrialCapExceeded(DirsimError, RuntimeError):
    pass


class DegenerateDraw(DirsimError, ArithmeticError):
    pass


class NotConverged(DirsimError, ArithmeticError):
    pass


class UnsupportedDistribution(DirsimError, ValueError):
    pass


class InsufficientSamples(DirsimError, ValueError):
    pass
