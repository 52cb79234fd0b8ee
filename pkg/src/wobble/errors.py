"""Exception types shared across the solver."""


class WobbleError(Exception):
    """Base class for all solver errors."""


class DomainError(WobbleError):
    """Input outside the valid domain (bad coordinates, malformed geometry)."""


class ParseError(WobbleError):
    """Terrain file text could not be parsed."""


class ValidationError(WobbleError):
    """Parsed data violates a structural invariant."""


class NumericalFailure(WobbleError):
    """An iteration failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ConditionViolation(WobbleError):
    """A certified slope limit or uniqueness condition was breached."""


class BlockedMotion(WobbleError):
    """A continuation step found no root in its bracket."""


class GeometryViolation(WobbleError):
    """Geometry that theory rules out under the stated slope limits."""


class CoplanarPoints(WobbleError):
    """Four points are (near-)coplanar, so no unique sphere exists.

    Semantically this is not always a failure: for a settled table it means
    the free foot already rests on the ground.
    """
