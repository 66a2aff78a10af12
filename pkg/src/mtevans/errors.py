"""Exception types shared across the package."""


class MTEvansError(Exception):
    """Base class for all package errors."""


class PhysicalityError(MTEvansError, ValueError):
    """Raised when an endstate violates ``nu_minus*f_cat - u_plus*omega*c**2 > 0``.

    The offending value of that quantity is stored on ``margin``.
    """

    def __init__(self, msg, margin=None):
        super().__init__(msg)
        self.margin = margin


class NongenericEndstateError(MTEvansError):
    """Raised when the stable manifold at an endstate does not have dimension three."""


class SolverError(MTEvansError):
    """Raised when a nonlinear or ODE solve fails.

    ``residual`` holds the last residual norm when one is available.
    """

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class DomainSizeError(SolverError):
    """Raised when the truncation tolerance cannot be met by enlarging the domain."""


class SplittingError(MTEvansError):
    """Raised when the limiting Evans matrix loses the (3, 3) root splitting."""

    def __init__(self, msg, lam=None, counts=None):
        super().__init__(msg)
        self.lam = lam
        self.counts = counts


class RegimeError(MTEvansError, ValueError):
    """Raised when a classical formula is evaluated outside its regime."""


class StepSizeError(MTEvansError):
    """Raised when time stepping blows up; ``suggested_dt`` is half the step used."""

    def __init__(self, msg, suggested_dt=None):
        super().__init__(msg)
        self.suggested_dt = suggested_dt


class TrivialOnlyError(MTEvansError):
    """Raised when the reduced (d = 0) problem admits only the zero solution."""

    verdict = "trivial-only"
