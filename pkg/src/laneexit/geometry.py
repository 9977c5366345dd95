"""Small planar helpers shared by the planner, conflict gate, and simulator.

Points are plain ``(x, y)`` tuples, angles radians.  Kept dependency-free
and allocation-light; these run inside the per-tick simulation loop.
"""

from __future__ import annotations

import math

Point = tuple[float, float]


def rotate(angle: float, v: Point) -> Point:
    c, s = math.cos(angle), math.sin(angle)
    return (c * v[0] - s * v[1], s * v[0] + c * v[1])


def to_world(origin: Point, angle: float, v_body: Point) -> Point:
    c, s = math.cos(angle), math.sin(angle)
    return (
        origin[0] + c * v_body[0] - s * v_body[1],
        origin[1] + s * v_body[0] + c * v_body[1],
    )


def to_body(origin: Point, angle: float, p_world: Point) -> Point:
    dx, dy = p_world[0] - origin[0], p_world[1] - origin[1]
    c, s = math.cos(angle), math.sin(angle)
    return (c * dx + s * dy, -s * dx + c * dy)


def cross(a: Point, b: Point) -> float:
    return a[0] * b[1] - a[1] * b[0]


def line_segment_intersection(
    origin: Point, direction: Point, a: Point, b: Point, tol: float = 1e-9
) -> Point | None:
    """Intersection of an infinite line with the closed segment a-b.

    Returns None when parallel (including collinear overlap, which has no
    unique crossing) or when the crossing lies outside the segment by more
    than ``tol`` meters.
    """
    ex, ey = b[0] - a[0], b[1] - a[1]
    den = direction[0] * ey - direction[1] * ex
    seg_len = math.hypot(ex, ey)
    if abs(den) <= 1e-15 * max(1.0, seg_len):
        return None
    wx, wy = a[0] - origin[0], a[1] - origin[1]
    t = (wx * ey - wy * ex) / den
    u = (wx * direction[1] - wy * direction[0]) / den
    if seg_len > 0.0:
        slack = tol / seg_len
    else:
        slack = tol
    if u < -slack or u > 1.0 + slack:
        return None
    return (origin[0] + t * direction[0], origin[1] + t * direction[1])


def _project(poly, nx: float, ny: float) -> tuple[float, float]:
    lo = hi = poly[0][0] * nx + poly[0][1] * ny
    for p in poly[1:]:
        d = p[0] * nx + p[1] * ny
        if d < lo:
            lo = d
        elif d > hi:
            hi = d
    return lo, hi


def convex_polygons_intersect(poly_a, poly_b, tol: float = 1e-9) -> bool:
    """Separating-axis test for two convex polygons.

    Touching boundaries (gap within ``tol`` meters) count as intersecting,
    which biases the test toward reporting contact.
    """
    for poly in (poly_a, poly_b):
        n = len(poly)
        for i in range(n):
            px, py = poly[i]
            qx, qy = poly[(i + 1) % n]
            ex, ey = qx - px, qy - py
            length = math.hypot(ex, ey)
            if length < 1e-12:
                continue
            nx, ny = -ey / length, ex / length
            a_lo, a_hi = _project(poly_a, nx, ny)
            b_lo, b_hi = _project(poly_b, nx, ny)
            if a_lo - b_hi > tol or b_lo - a_hi > tol:
                return False
    return True


def point_in_convex_polygon(p: Point, poly, tol: float = 1e-9) -> bool:
    """Membership test with a ``tol``-meter boundary slack (any winding)."""
    pos = neg = False
    n = len(poly)
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        length = math.hypot(ex, ey)
        if length < 1e-12:
            continue
        d = (ex * (p[1] - ay) - ey * (p[0] - ax)) / length
        if d > tol:
            pos = True
        elif d < -tol:
            neg = True
        if pos and neg:
            return False
    return True
