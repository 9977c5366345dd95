"""Quadratic Bezier lane-exit paths.

A lane exit connects a point on the entry lane to a point on the exit
lane with a quadratic Bezier curve whose intermediate control point is
the intersection of the two lane direction lines, so the path tangents
match the lanes at both ends.  The curve stays inside the convex hull of
its three control points, which later serves as the conflict region.

The intermediate point is computed as a parametric line-line
intersection, which stays exact for vertical lanes where tan-based
formulas blow up.  Arc length uses composite Simpson quadrature on the
derivative magnitude (smooth integrand); a cached cumulative table plus
bisection inverts it so the curve can be traversed at constant speed.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

from .geometry import Point, cross, point_in_convex_polygon

_COLLINEAR_TOL = 1e-9  # m^2, control-point triangle area scale


class ParallelLanesError(ValueError):
    """Lane direction lines do not meet in a unique point."""


class DegenerateHeadingError(ValueError):
    """Curve derivative vanished; heading undefined at a cusp."""


@dataclass(frozen=True)
class LaneGeometry:
    """Entry/exit points and lane orientation angles."""

    p_i: Point
    p_f: Point
    theta_i: float
    theta_f: float

    def __post_init__(self):
        if abs(math.sin(self.theta_i - self.theta_f)) < 1e-12:
            raise ParallelLanesError(
                f"lane angles {self.theta_i} and {self.theta_f} are parallel"
            )


def intermediate_control_point(geom: LaneGeometry) -> Point:
    """Meeting point of the entry/exit lane direction lines."""
    di = (math.cos(geom.theta_i), math.sin(geom.theta_i))
    df = (math.cos(geom.theta_f), math.sin(geom.theta_f))
    den = cross(di, df)
    if abs(den) < 1e-12:
        raise ParallelLanesError("lane direction lines are parallel")
    w = (geom.p_f[0] - geom.p_i[0], geom.p_f[1] - geom.p_i[1])
    s = cross(w, df) / den
    return (geom.p_i[0] + s * di[0], geom.p_i[1] + s * di[1])


def control_point_hull(p_i: Point, p_int: Point, p_f: Point) -> tuple[Point, ...]:
    """Convex hull of the control points: a CCW triangle, or the extreme
    pair when the points are collinear."""
    area2 = cross(
        (p_int[0] - p_i[0], p_int[1] - p_i[1]),
        (p_f[0] - p_i[0], p_f[1] - p_i[1]),
    )
    if abs(area2) <= _COLLINEAR_TOL:
        pts = [p_i, p_int, p_f]
        dx = max(pts, key=lambda p: p[0])[0] - min(pts, key=lambda p: p[0])[0]
        key = (lambda p: p[0]) if dx > 0 else (lambda p: p[1])
        return (min(pts, key=key), max(pts, key=key))
    if area2 > 0.0:
        return (p_i, p_int, p_f)
    return (p_i, p_f, p_int)


class LaneExitPath:
    """Quadratic Bezier path with cached arc-length parameterization."""

    _KNOTS = 1024
    _PANELS = 8  # Simpson panels per knot interval

    def __init__(self, p_i: Point, p_int: Point, p_f: Point):
        self.p_i = (float(p_i[0]), float(p_i[1]))
        self.p_int = (float(p_int[0]), float(p_int[1]))
        self.p_f = (float(p_f[0]), float(p_f[1]))
        self.hull = control_point_hull(self.p_i, self.p_int, self.p_f)
        self._cum = self._build_arc_table()
        self.arc_length = self._cum[-1]

    @classmethod
    def from_geometry(cls, geom: LaneGeometry) -> "LaneExitPath":
        return cls(geom.p_i, intermediate_control_point(geom), geom.p_f)

    def evaluate(self, tau: float) -> Point:
        """Curve point at parameter ``tau`` in [0, 1]."""
        self._check_tau(tau)
        w0 = (1.0 - tau) * (1.0 - tau)
        w1 = 2.0 * tau * (1.0 - tau)
        w2 = tau * tau
        return (
            w0 * self.p_i[0] + w1 * self.p_int[0] + w2 * self.p_f[0],
            w0 * self.p_i[1] + w1 * self.p_int[1] + w2 * self.p_f[1],
        )

    def derivative(self, tau: float) -> Point:
        a = 1.0 - tau
        return (
            2.0 * (a * (self.p_int[0] - self.p_i[0]) + tau * (self.p_f[0] - self.p_int[0])),
            2.0 * (a * (self.p_int[1] - self.p_i[1]) + tau * (self.p_f[1] - self.p_int[1])),
        )

    def speed(self, tau: float) -> float:
        dx, dy = self.derivative(tau)
        return math.hypot(dx, dy)

    def heading(self, tau: float) -> float:
        """Tangent direction at ``tau``; matches the lane angles at the ends."""
        self._check_tau(tau)
        dx, dy = self.derivative(tau)
        if math.hypot(dx, dy) < 1e-12:
            raise DegenerateHeadingError(f"zero derivative at tau={tau}")
        return math.atan2(dy, dx)

    def traversal_time(self, v_e: float) -> float:
        """Time to traverse the whole path at constant speed ``v_e``."""
        if not v_e > 0.0:
            raise ValueError(f"speed must be > 0, got {v_e}")
        return self.arc_length / v_e

    def arc_length_to_tau(self, s: float) -> float:
        """Parameter at which the arc length from 0 equals ``s``."""
        if s < -1e-9 or s > self.arc_length + 1e-9:
            raise ValueError(f"arc length {s} outside [0, {self.arc_length}]")
        s = min(max(s, 0.0), self.arc_length)
        if s == 0.0:
            return 0.0
        if s == self.arc_length:
            return 1.0
        k = min(max(bisect_right(self._cum, s) - 1, 0), self._KNOTS - 1)
        anchor = k / self._KNOTS
        lo, hi = anchor, (k + 1) / self._KNOTS
        base = self._cum[k]
        while hi - lo > 1e-13:
            mid = 0.5 * (lo + hi)
            if base + self._simpson(anchor, mid) < s:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def contains_point(self, p: Point, tol: float = 1e-9) -> bool:
        return point_in_convex_polygon(p, self.hull, tol)

    def _check_tau(self, tau: float) -> None:
        if tau < -1e-12 or tau > 1.0 + 1e-12:
            raise ValueError(f"tau must lie in [0, 1], got {tau}")

    def _build_arc_table(self) -> list[float]:
        n = self._KNOTS * self._PANELS
        h = 1.0 / n
        speeds = [self.speed(i * h) for i in range(n + 1)]
        cum = [0.0] * (self._KNOTS + 1)
        for j in range(self._KNOTS):
            base = j * self._PANELS
            acc = speeds[base] + speeds[base + self._PANELS]
            for i in range(1, self._PANELS):
                acc += (4.0 if i % 2 else 2.0) * speeds[base + i]
            cum[j + 1] = cum[j] + acc * h / 3.0
        return cum

    def _simpson(self, a: float, b: float) -> float:
        # 4-panel Simpson; intervals here never exceed one knot width.
        h = (b - a) / 4.0
        return (
            self.speed(a)
            + 4.0 * self.speed(a + h)
            + 2.0 * self.speed(a + 2.0 * h)
            + 4.0 * self.speed(a + 3.0 * h)
            + self.speed(b)
        ) * h / 3.0
