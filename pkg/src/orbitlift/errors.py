"""Exception types shared across the package."""

from __future__ import annotations


class OrbitLiftError(Exception):
    """Base class for all errors raised by this package."""


class ExprSyntaxError(OrbitLiftError):
    """Malformed curve expression; carries the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ExprDomainError(OrbitLiftError):
    """Expression is invalid on its face, e.g. pow of a negative constant."""


class EvalError(OrbitLiftError):
    """Expression evaluation failed at a specific parameter value."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (at t={t!r})")
        self.t = t


class InvalidWindow(OrbitLiftError):
    """Refinement window is degenerate or outside the grid domain."""


class GridTooCoarse(OrbitLiftError):
    """Not enough samples for the requested difference-quotient order."""


class NotHyperbolic(OrbitLiftError):
    """A certified complex root pair was detected."""


class NotHyperbolicAt(NotHyperbolic):
    """Curve leaves the hyperbolic locus at parameter t."""

    def __init__(self, t: float):
        super().__init__(f"polynomial not hyperbolic at t={t!r}")
        self.t = t


class UnresolvedCollision(OrbitLiftError):
    """Branch pairing at a collision stayed ambiguous at maximal refinement."""

    def __init__(self, window: tuple[float, float]):
        super().__init__(f"unresolved collision on window {window!r}")
        self.window = window


class UnsupportedParameter(OrbitLiftError):
    """Group family does not admit the requested size parameter."""


class DimensionMismatch(OrbitLiftError):
    """Point dimension does not match the representation space."""


class EnumerationTooLarge(OrbitLiftError):
    """Group order exceeds the exhaustive-enumeration limit."""


class ToleranceViolation(OrbitLiftError):
    """Input sits in the near-miss band (tol, 10*tol) of the image; ill-posed."""


class NotInImageAt(OrbitLiftError):
    """Orbit-space curve leaves the image of the invariant map at t."""

    def __init__(self, t: float, residual: float | None = None):
        msg = f"curve value not in the orbit-map image at t={t!r}"
        if residual is not None:
            msg += f" (residual {residual:.3e})"
        super().__init__(msg)
        self.t = t
        self.residual = residual
