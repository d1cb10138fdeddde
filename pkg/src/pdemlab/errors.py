"""Exception types raised across pdemlab."""


class PdemError(Exception):
    """Base class for every error raised by this package."""


class NotCNumber(PdemError):
    """A structure constant still depends on x or on a function symbol."""


class PoleAtX(PdemError, ValueError):
    """The mass profile has a pole (c0 + alpha*x == 0) at the requested point."""


class DomainViolation(PdemError, ValueError):
    """The inverse mass 1/(2m) is not strictly positive on the grid."""


class DegenerateFrequency(PdemError, ValueError):
    """alpha*beta == 0 and the polynomial branch was disabled."""


class StepTooLarge(PdemError, ValueError):
    """Runge-Kutta step exceeds the admissible bound."""


class TimeDependentMassNotSupported(PdemError):
    """The operation needs a time-independent c0."""


class SingularSolve(PdemError, ArithmeticError):
    """The Crank-Nicolson system could not be factorised."""


class PoleOnPath(PdemError, ValueError):
    """mu1 + c0(tau) vanishes somewhere on the integration path."""


class SupportTooWide(PdemError, ValueError):
    """A translated state would touch the boundary margin."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ExactnessViolated(PdemError):
    """dc0/dt differs from 2*alpha*mu1*mu2, so K is not time independent."""


class ConfigInvalid(PdemError, ValueError):
    """A scenario document failed validation."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
