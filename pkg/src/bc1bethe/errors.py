"""Exception hierarchy shared by all modules."""


class BC1Error(Exception):
    """Base class for every error raised by the package."""


class LatticeError(BC1Error, ValueError):
    """Degenerate or mis-oriented period lattice."""


class PoleError(BC1Error, ZeroDivisionError):
    """Evaluation too close to a pole.

    Attributes
    ----------
    point : complex
        The argument that was requested.
    pole : complex
        The nearest pole (lattice point, or shifted lattice point).
    factor : str or None
        Which factor of a product hit the pole, if known.
    """

    def __init__(self, message, point=None, pole=None, factor=None):
        super().__init__(message)
        self.point = point
        self.pole = pole
        self.factor = factor


class EllipticRangeError(BC1Error, OverflowError):
    """Quasi-periodicity prefactor overflows double precision."""

    def __init__(self, message, exponent=None):
        super().__init__(message)
        self.exponent = exponent


class CouplingError(BC1Error, ValueError):
    """Invalid coupling constants (negative, non-integer, rational step)."""


class SingularConfigurationError(BC1Error):
    """A sigma factor of the Bethe system vanishes."""

    def __init__(self, message, equation=None):
        super().__init__(message)
        self.equation = equation


class ConvergenceError(BC1Error):
    """Newton iteration failed to reach the requested tolerance."""

    def __init__(self, message, residual=None, iterations=None, state=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.state = state


class RejectedSolutionError(BC1Error):
    """Converged point violates t_i + t_j not in the period lattice."""

    def __init__(self, message, pair=None, state=None):
        super().__init__(message)
        self.pair = pair
        self.state = state


class InsufficientGridError(BC1Error):
    """Too few admissible points survive the grid filter."""


class InvolutionMismatchError(BC1Error):
    """The involuted sample failed to re-certify."""


class FormatError(BC1Error, ValueError):
    """Bad input for curve export/import."""
