"""Exception hierarchy shared by all modules."""


class QFidError(Exception):
    """Base class for every numerical failure raised by :mod:`qfid`."""


class DomainError(QFidError, ValueError):
    """Argument outside the domain where the quantity is defined."""


class NonConvergence(QFidError, ArithmeticError):
    """A series, product or iteration hit its budget before its tolerance."""


# both spellings appear in the public contract
NoConvergence = NonConvergence


class BranchEscape(QFidError, ArithmeticError):
    """An inversion iterate left the lower half-plane."""


class QuadFailure(QFidError, ArithmeticError):
    """Adaptive quadrature could not reach the requested accuracy."""


class NoneFound(QFidError, LookupError):
    """No root was located inside the search bracket."""


class StallError(QFidError, ArithmeticError):
    """Curve continuation could not keep the residual under control."""


class OnContourZero(QFidError, ArithmeticError):
    """The function vanishes (numerically) on the integration contour."""
