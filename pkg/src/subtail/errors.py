"""Shared exception types.

The toolkit distinguishes three failure kinds that callers are expected to
branch on: bad arguments (DomainError), values outside an invertible map's
range (RangeError), and inputs outside the validity region of a theoretical
bound (RegimeError).  Numerical non-convergence is never silent; it raises
QuadratureError carrying the achieved error.
"""


class SubtailError(Exception):
    """Base class for all toolkit errors."""


class DomainError(SubtailError, ValueError):
    """Argument outside a function's domain (e.g. s <= 0 for a tail kernel)."""


class RangeError(SubtailError, ValueError):
    """Target value outside the range of a monotone map being inverted."""

    def __init__(self, msg, bracket=None):
        super().__init__(msg)
        self.bracket = bracket


class RegimeError(SubtailError, ValueError):
    """(r, t) or (t, x, y) outside the regime of the requested bound.

    The message names the failed inequality.
    """


class AtomError(SubtailError, ValueError):
    """Levy density requested exactly at a knot/atom of a tabulated kernel."""


class QuadratureError(SubtailError, RuntimeError):
    """Quadrature failed to reach its target; carries the achieved error."""

    def __init__(self, msg, achieved=None, target=None):
        super().__init__(msg)
        self.achieved = achieved
        self.target = target
