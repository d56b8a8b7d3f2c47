"""Exception types raised across the package."""


class PlatoonError(Exception):
    """Base class for all package errors."""


class GainOutOfRangeError(PlatoonError, ValueError):
    """A gain or headway parameter lies outside its admissible interval."""


class NonHurwitzError(PlatoonError, ArithmeticError):
    """A characteristic polynomial has a root in the closed right half-plane.

    ``tau`` carries the offending parasitic lag when the failure came from a
    sweep over a lag family.
    """

    def __init__(self, message, tau=None):
        super().__init__(message)
        self.tau = tau


class NonConvergenceError(PlatoonError, ArithmeticError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotRealDistinct(PlatoonError):
    """The pole set is not real and distinct, so a residue criterion does not apply."""


class DivergenceError(PlatoonError, FloatingPointError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
