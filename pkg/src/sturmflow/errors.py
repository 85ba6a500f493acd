"""Exception types shared across modules."""

from .shooting import ShootingError


class DegenerateEndpointError(RuntimeError):
    """``lam = 0`` or ``lam = 1`` carries a kernel; the indices are undefined there."""


class ZeroOnContourError(RuntimeError):
    """``rho`` falls below the magnitude floor on a contour."""


class RefinementExhaustedError(RuntimeError):
    """Phase unwrapping hit the refinement depth limit."""


class CrossingError(RuntimeError):
    """An inertia jump could not be matched with a localised kernel."""


__all__ = [
    "ShootingError",
    "DegenerateEndpointError",
    "ZeroOnContourError",
    "RefinementExhaustedError",
    "CrossingError",
]
