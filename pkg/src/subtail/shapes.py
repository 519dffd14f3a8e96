"""Scaling shapes: the space/time scale functions Phi, Psi and volume V.

Only power instances ship in v1 (Phi(r) = r^alpha, V(x,r) = r^d); the weak
scaling indices are carried explicitly so regime thresholds and the closed
integral forms can be written against (alpha1, alpha2, d1, d2) as in the
general statements.
"""

from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class PowerLaw:
    """f(r) = r**alpha with both weak-scaling indices equal to alpha."""

    alpha: float

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise DomainError("PowerLaw exponent must be positive")

    @property
    def alpha1(self):
        return self.alpha

    @property
    def alpha2(self):
        return self.alpha

    def __call__(self, r):
        return r**self.alpha

    def inv(self, y):
        return y ** (1.0 / self.alpha)


def as_shape(phi_shape):
    """Coerce an exponent or shape object into a scaling shape."""
    if isinstance(phi_shape, (int, float)):
        return PowerLaw(float(phi_shape))
    if callable(phi_shape) and hasattr(phi_shape, "alpha1"):
        return phi_shape
    raise DomainError("expected an exponent or a scaling-shape object, got %r" % (phi_shape,))
