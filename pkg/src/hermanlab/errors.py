"""Exception hierarchy.

Everything numerical derives from :class:`NumericalError`, which the command
line maps to exit code 1. Domain mistakes by the caller are plain
``ValueError`` subclasses.
"""


class HermanLabError(Exception):
    """Base class for all package errors."""


class DomainError(HermanLabError, ValueError):
    """An argument lies outside the domain of an operation."""


class NumericalError(HermanLabError):
    """A numerical procedure failed to produce a trustworthy answer."""


class RationalWithinResolution(NumericalError):
    """The input cannot be distinguished from a rational at double precision."""


class ConvergentOverflow(NumericalError, OverflowError):
    """A convergent denominator exceeded the signed 64-bit range."""


class DegeneratePair(NumericalError):
    """A translation pair with ``u == v`` has no prime renormalization."""


class PeriodNotFound(NumericalError):
    pass


class EnumerationBudgetExceeded(NumericalError):
    pass


class PoleError(NumericalError):
    """Evaluation hit a pole of the rational map."""


class CriticalStructureError(NumericalError):
    pass


class LiftDiscontinuity(NumericalError):
    """Branch tracking of the circle lift failed."""


class BracketError(NumericalError):
    """No bracketing interval, or a non-monotone bracket, for bisection."""


class NewtonDivergence(NumericalError):
    pass


class WrongCombinatorics(NumericalError):
    """A root was found but its critical orbit has the wrong return pattern."""


class OrbitEscaped(NumericalError):
    pass


class InsufficientOrbit(NumericalError):
    """The orbit is too short for the requested renormalization level."""


class InconclusiveInteriorTest(NumericalError):
    pass


class IncompatibleCombinatorics(NumericalError):
    pass


class BranchAmbiguity(NumericalError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class PixelBudgetExceeded(NumericalError):
    pass


class CenterSequenceError(NumericalError):
    """Raised by the center continuation; ``partial`` holds validated centers."""

    def __init__(self, message, partial=()):
        super().__init__(message)
        self.partial = list(partial)
