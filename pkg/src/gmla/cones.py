"""Conic sectors of the phase plane and smooth cutoff symbols supported in them."""

from dataclasses import dataclass

import numpy as np

from gmla.expr import AStep, RStep, mul, wrap_angle


class ConeError(ValueError):
    pass


@dataclass(frozen=True)
class Cone:
    """Angular sector [theta_lo, theta_hi] (radians) outside the ball of radius R."""

    theta_lo: float
    theta_hi: float
    R: float = 0.0

    def __post_init__(self):
        width = self.theta_hi - self.theta_lo
        if not 0 < width < 2 * np.pi:
            raise ConeError(f"cone width {width!r} must lie in (0, 2*pi)")
        if self.R < 0:
            raise ConeError("inner radius must be nonnegative")

    @classmethod
    def from_degrees(cls, lo, hi, R=0.0):
        return cls(np.deg2rad(lo), np.deg2rad(hi), R)

    @property
    def mid(self):
        return 0.5 * (self.theta_lo + self.theta_hi)

    @property
    def half(self):
        return 0.5 * (self.theta_hi - self.theta_lo)

    def angle_offset(self, theta):
        """Signed offset of theta from the sector midpoint, in (-pi, pi]."""
        return wrap_angle(np.asarray(theta, dtype=float) - self.mid)

    def contains_angle(self, theta, margin=0.0):
        return np.abs(self.angle_offset(theta)) <= self.half - margin

    def contains(self, x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        r = np.hypot(x, xi)
        return (r > self.R) & self.contains_angle(np.arctan2(xi, x))


def angular_plateau(mid, half, w_angle):
    """Smooth function of the angle: 1 for |phi| <= half - w_angle, 0 for |phi| >= half."""
    return mul(
        AStep(0, float(mid), float(-half), float(w_angle), 1.0),
        AStep(0, float(mid), float(half), float(w_angle), -1.0),
    )


def radial_ramp(R, w_radial):
    """Smooth function of |z|: 0 for |z| <= R, 1 for |z| >= R + w_radial."""
    return RStep(0, float(R), float(w_radial), 1.0)


def cone_cutoff(cone, R, w_angle, w_radial):
    """Order-0 cutoff equal to 1 deep inside the cone and 0 outside it."""
    if not (w_angle > 0 and w_angle < cone.half):
        raise ConeError(f"angular width {w_angle!r} must lie in (0, {cone.half!r})")
    if not (R > 0 and w_radial > 0):
        raise ConeError("R and w_radial must be positive")
    return mul(radial_ramp(R, w_radial), angular_plateau(cone.mid, cone.half, w_angle))
