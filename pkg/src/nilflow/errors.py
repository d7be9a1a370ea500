"""Exception hierarchy shared by all modules."""


class NilflowError(Exception):
    """Base class for every error raised by nilflow."""


class StructureError(NilflowError, ValueError):
    """Malformed algebra, metric or matrix data (bad index, shape mismatch)."""


class DomainError(NilflowError, ValueError):
    """Parameter outside the domain of an operation (n = 0, t <= 0, ...)."""


class NotPositiveDefiniteError(NilflowError, ValueError):
    """A metric failed the symmetric positive-definite check."""


class DegeneratePlaneError(NilflowError, ValueError):
    """Sectional curvature requested on a degenerate 2-plane."""


class UnsupportedAlgebraError(NilflowError, ValueError):
    """Operation defined only for a particular algebra family."""


class FlowBreakdownError(NilflowError, ArithmeticError):
    """The Ricci flow integration could not continue.

    Attributes
    ----------
    t_last : float
        Last time at which the state was valid.
    """

    def __init__(self, message, t_last):
        super().__init__(f"{message} (last valid t = {t_last!r})")
        self.t_last = t_last
