"""Plane points in Cartesian and polar form, the wake coordinate and relative polar coordinates.

Angles live in (-pi, pi].  The origin is given the angle 0.
"""

from dataclasses import dataclass

import numpy as np


def wrap_angle(theta):
    """Reduce an angle (array) to (-pi, pi]."""
    t = np.asarray(theta, dtype=float)
    w = np.mod(t + np.pi, 2.0 * np.pi) - np.pi
    # mod maps pi to -pi; keep the closed end at +pi
    w = np.where(w == -np.pi, np.pi, w)
    return w if w.ndim else float(w)


def polar_angle(x1, x2):
    """Angle of (x1, x2) in (-pi, pi]; 0 at the origin."""
    th = np.arctan2(x2, x1)
    # arctan2(+-0, -1) gives +-pi; the branch is (-pi, pi]
    th = np.where(th == -np.pi, np.pi, th)
    return th if np.ndim(th) else float(th)


@dataclass(frozen=True)
class PolarPoint:
    x1: float
    x2: float
    r: float
    theta: float

    @classmethod
    def from_polar(cls, r, theta):
        theta = wrap_angle(theta)
        return cls(r * np.cos(theta), r * np.sin(theta), float(r), theta)

    @property
    def xy(self):
        return np.array([self.x1, self.x2])


@dataclass(frozen=True)
class RelativePolar:
    r1: float
    theta1: float


def to_polar(p):
    """Convert a Cartesian pair to a PolarPoint."""
    x1, x2 = float(p[0]), float(p[1])
    return PolarPoint(x1, x2, float(np.hypot(x1, x2)), polar_angle(x1, x2))


def wake_exponent(r, theta):
    """r (1 - cos theta), written as 2 r sin^2(theta/2) to avoid cancellation."""
    s = np.sin(0.5 * np.asarray(theta, dtype=float))
    return 2.0 * np.asarray(r, dtype=float) * s * s


def wake_exponent_xy(x1, x2):
    """|x| - x1 evaluated without cancellation on the downstream axis."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    r = np.hypot(x1, x2)
    # |x| - x1 = x2^2 / (|x| + x1) when x1 > 0
    pos = x1 > 0
    denom = np.where(pos, r + x1, 1.0)
    return np.where(pos, x2 * x2 / denom, r - x1)


def relative_polar(x, x0):
    """Polar coordinates (r1, theta1) of x - x0 for two PolarPoints."""
    d1 = x.x1 - x0.x1
    d2 = x.x2 - x0.x2
    return RelativePolar(float(np.hypot(d1, d2)), polar_angle(d1, d2))


def polar_identity_residual(r, theta, r0, theta0):
    """(r - r0 cos(theta - theta0)) - r1 cos(theta1 - theta) for array inputs."""
    x1, x2 = r * np.cos(theta), r * np.sin(theta)
    y1, y2 = r0 * np.cos(theta0), r0 * np.sin(theta0)
    d1, d2 = x1 - y1, x2 - y2
    r1 = np.hypot(d1, d2)
    th1 = polar_angle(d1, d2)
    lhs = r - r0 * np.cos(wrap_angle(theta - theta0))
    rhs = r1 * np.cos(wrap_angle(th1 - theta))
    return lhs - rhs
