"""Conflict gate for the lane-exit maneuver.

The neighbor is wrapped in a rectangular obstacle region built from the
depth-bound band plus the vehicle dimensions, expressed in the frame of
the ego pose that produced the measurement.  Two certificates decide
whether the maneuver may start:

* ``d_v1`` (+1): the region is clear of the path hull and the neighbor
  has already passed the downstream gate by the safety separation.
* ``d_v2`` (+1): the region is clear, the neighbor is still short of the
  upstream gate by the separation, and it stays so when advanced by the
  worst-case displacement ``(v_upper + v_e) * t_c`` over the maneuver.

Gate positions are the crossings of the neighbor-lane centerline with the
hull edges; all along-lane comparisons use signed positions in the
direction of the neighbor's travel, which keeps the logic independent of
how the scenario axes are drawn.  A missing closing-speed bound forces
``d_v2 = -1``: there is no proceed-by-default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .depth import DepthEstimate
from .geometry import (
    Point,
    convex_polygons_intersect,
    line_segment_intersection,
    to_world,
)

_BOUNDARY_TOL = 1e-9


class GeometryError(ValueError):
    """Scenario geometry does not produce the required intersections."""


class WaitTimeoutError(RuntimeError):
    """The wait loop never reached a proceed verdict (deadlock diagnostic)."""

    def __init__(self, events):
        super().__init__(f"wait loop timed out after {len(events)} evaluations")
        self.events = list(events)


@dataclass(frozen=True)
class ObstacleRegion:
    """Rectangle around the neighbor, axes aligned with the ego heading."""

    corners: tuple[Point, Point, Point, Point]
    heading: float

    def translated(self, delta: Point) -> "ObstacleRegion":
        dx, dy = delta
        return ObstacleRegion(
            corners=tuple((x + dx, y + dy) for x, y in self.corners),
            heading=self.heading,
        )


@dataclass(frozen=True)
class CenterLine:
    """Neighbor-lane centerline: a point on it plus the travel direction."""

    point: Point
    angle: float

    def direction(self) -> Point:
        return (math.cos(self.angle), math.sin(self.angle))

    def along(self, p: Point) -> float:
        """Signed position of ``p`` along the direction of travel."""
        dx, dy = p[0] - self.point[0], p[1] - self.point[1]
        c, s = self.direction()
        return dx * c + dy * s

    def lateral(self, p: Point) -> float:
        dx, dy = p[0] - self.point[0], p[1] - self.point[1]
        c, s = self.direction()
        return -dx * s + dy * c

    def advance(self, distance: float) -> Point:
        c, s = self.direction()
        return (distance * c, distance * s)


class Verdict(Enum):
    PROCEED = "proceed"
    WAIT = "wait"


@dataclass(frozen=True)
class Decision:
    d_v1: int
    d_v2: int
    verdict: Verdict
    evaluated_at: float

    def __post_init__(self):
        if self.d_v1 not in (-1, 1) or self.d_v2 not in (-1, 1):
            raise ValueError("decision variables must be -1 or +1")
        proceed = self.d_v1 == 1 or self.d_v2 == 1
        if (self.verdict is Verdict.PROCEED) != proceed:
            raise ValueError("verdict inconsistent with decision variables")


@dataclass(frozen=True)
class DecisionEvent:
    t: float
    decision: Decision
    s_n: float | None
    v_upper: float | None


@dataclass(frozen=True)
class ConflictInputs:
    """Static gate inputs for one intersection."""

    hull: tuple[Point, ...]
    centerline: CenterLine
    x_p1: Point
    x_p2: Point
    d_s: float
    v_e: float
    t_c: float

    def __post_init__(self):
        if not self.d_s > 0.0:
            raise ValueError(f"d_s must be > 0, got {self.d_s}")
        if not self.t_c > 0.0:
            raise ValueError(f"t_c must be > 0, got {self.t_c}")


def obstacle_region(
    ego_pose: tuple[Point, float],
    estimate: DepthEstimate,
    y_m: float,
    dims: tuple[float, float],
) -> ObstacleRegion:
    """Rectangle spanning the depth band inflated by the vehicle size.

    An absent lower bound is replaced by 0, stretching the region toward
    the ego (pessimistic).
    """
    position, alpha = ego_pose
    l_s, w_s = dims
    x_lo = (estimate.lower if estimate.lower is not None else 0.0) - l_s / 2.0
    x_hi = estimate.upper + l_s / 2.0
    y_lo = y_m - w_s / 2.0
    y_hi = y_m + w_s / 2.0
    corners = (
        to_world(position, alpha, (x_lo, y_lo)),
        to_world(position, alpha, (x_hi, y_lo)),
        to_world(position, alpha, (x_hi, y_hi)),
        to_world(position, alpha, (x_lo, y_hi)),
    )
    return ObstacleRegion(corners=corners, heading=alpha)


def centerline_crossings(
    p_i: Point, p_int: Point, p_f: Point, centerline: CenterLine
) -> tuple[Point, Point]:
    """Gate points: centerline crossings of segments p_i-p_f and p_int-p_f."""
    direction = centerline.direction()
    x_p1 = line_segment_intersection(centerline.point, direction, p_i, p_f)
    x_p2 = line_segment_intersection(centerline.point, direction, p_int, p_f)
    if x_p1 is None or x_p2 is None:
        raise GeometryError(
            "neighbor-lane centerline must cross both the entry-exit chord "
            "and the control-exit edge"
        )
    return x_p1, x_p2


def regions_intersect(region: ObstacleRegion, hull) -> bool:
    """True when the obstacle rectangle and the path hull overlap.

    Shared boundary counts as intersection.
    """
    return convex_polygons_intersect(region.corners, hull, tol=_BOUNDARY_TOL)


def evaluate_decision(
    inputs: ConflictInputs,
    s_n: float,
    region: ObstacleRegion,
    v_upper: float | None,
    at_time: float,
) -> Decision:
    """Evaluate both certificates for one neighbor.

    ``s_n`` is the neighbor's signed along-lane position (travel
    direction positive); ``v_upper`` the current upper closing-speed
    bound, or None when no estimate exists yet.
    """
    s_p1 = inputs.centerline.along(inputs.x_p1)
    s_p2 = inputs.centerline.along(inputs.x_p2)
    clear_now = not regions_intersect(region, inputs.hull)

    d_v1 = 1 if clear_now and s_n > s_p1 + inputs.d_s else -1

    d_v2 = -1
    if clear_now and s_n < s_p2 - inputs.d_s and v_upper is not None:
        displacement = (v_upper + inputs.v_e) * inputs.t_c
        s_pred = s_n + displacement
        if s_pred < s_p2 - inputs.d_s:
            region_pred = region.translated(inputs.centerline.advance(displacement))
            if not regions_intersect(region_pred, inputs.hull):
                d_v2 = 1

    verdict = Verdict.PROCEED if (d_v1 == 1 or d_v2 == 1) else Verdict.WAIT
    return Decision(d_v1=d_v1, d_v2=d_v2, verdict=verdict, evaluated_at=at_time)


def run_wait_loop(
    inputs: ConflictInputs,
    observe: Callable[[float], tuple[float | None, ObstacleRegion | None, float | None]],
    t0: float,
    tick: float,
    timeout: float,
) -> list[DecisionEvent]:
    """Re-evaluate the gate every tick until the first proceed verdict.

    ``observe(t)`` supplies ``(s_n, region, v_upper)`` for the tracked
    neighbor; a None region means the neighbor is currently unobservable
    and forces a wait.  Once proceed is issued the loop returns and the
    decision is never revisited.  Raises :class:`WaitTimeoutError` (with
    the event log attached) when the timeout elapses first.
    """
    if not tick > 0.0:
        raise ValueError(f"tick must be > 0, got {tick}")
    events: list[DecisionEvent] = []
    k = 0
    while True:
        t = t0 + k * tick
        s_n, region, v_upper = observe(t)
        if region is None or s_n is None:
            decision = Decision(d_v1=-1, d_v2=-1, verdict=Verdict.WAIT, evaluated_at=t)
        else:
            decision = evaluate_decision(inputs, s_n, region, v_upper, t)
        events.append(DecisionEvent(t=t, decision=decision, s_n=s_n, v_upper=v_upper))
        if decision.verdict is Verdict.PROCEED:
            return events
        if t - t0 >= timeout:
            raise WaitTimeoutError(events)
        k += 1
