"""Closing speed from successive depth estimates and adaptive sampling.

The nominal closing speed between two sampled depths is the negative rate
of change ``-(x2 - x1) / dt`` (positive while approaching).  Its bounds
come from the worst pairing of the depth bands:

    v_upper = -(x2_lower - x1_upper) / dt
    v_lower = -(x2_upper - x1_lower) / dt

Choosing the next sampled depth ``x2`` so that

    (1 + epsilon) * (x1 - x2) = x1_upper - x2_lower

pins the relative deviation ``(v_upper - v_nom) / v_nom`` at exactly
``epsilon``, independent of the elapsed time.  ``next_sample_depth``
solves that implicit relation: the radical is isolated and squared into a
quadratic in ``x2``, the root in range is selected by checking the
unsquared equation, and a guarded bisection stands in when the closed
form degrades near the domain edges.

Sampling a depth stream is a sequential fold with no shared state; between
emitted samples the previous estimate remains in force.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

from .depth import (
    DepthErrorModel,
    DepthEstimate,
    bound_coefficients,
    depth_bounds,
    estimate_from_measurement,
)

_RESIDUAL_TOL = 1e-9


class NotApproachingError(ValueError):
    """Depth did not decrease between the two samples."""


class EstimateOutOfDomainError(ValueError):
    """A depth estimate lacks the lower bound required here."""


class EpsilonInfeasibleError(ValueError):
    """No sampling depth in (0, x1) attains the requested deviation."""


class StreamParseError(ValueError):
    """A depth-stream CSV could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class ClosingSpeedEstimate:
    """Closing speed and bounds from one pair of sampled depths.

    ``dx = x2 - x1`` is stored negative (the target is approaching);
    consumers that plot sampling distances use ``abs(dx)``.
    """

    v_nom: float
    v_upper: float
    v_lower: float
    first: DepthEstimate
    second: DepthEstimate
    t1: float
    t2: float
    dt: float
    dx: float

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.dx < 0.0:
            raise ValueError(f"dx must be < 0 (approaching), got {self.dx}")
        if not (self.v_lower <= self.v_nom + 1e-9 and self.v_nom <= self.v_upper + 1e-9):
            raise ValueError("closing-speed bounds out of order")

    @property
    def gamma_upper(self) -> float:
        """Relative deviation of the upper bound from nominal."""
        return (self.v_upper - self.v_nom) / self.v_nom


@dataclass(frozen=True)
class SamplingPlan:
    """Deviation threshold plus the depth model it applies to."""

    epsilon: float
    model: DepthErrorModel

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True)
class DepthStream:
    """Ordered (timestamp [s], measured depth [m]) pairs."""

    samples: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ts = [t for t, _ in self.samples]
        for a, b in zip(ts, ts[1:]):
            if not b > a:
                raise ValueError(f"timestamps must be strictly increasing ({a} -> {b})")

    @classmethod
    def from_csv(cls, path) -> "DepthStream":
        """Load a stream from CSV with the exact header ``t_s,x_m_m``."""
        samples = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                return cls(samples=())
            if [h.strip() for h in header] != ["t_s", "x_m_m"]:
                raise StreamParseError(
                    f"expected header 't_s,x_m_m', got {','.join(header)}", line=1
                )
            last_t = None
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 2:
                    raise StreamParseError(f"expected 2 columns, got {len(row)}", lineno)
                try:
                    t, x_m = float(row[0]), float(row[1])
                except ValueError:
                    raise StreamParseError(f"non-numeric value in {row}", lineno) from None
                if last_t is not None and t <= last_t:
                    raise StreamParseError(
                        f"timestamp {t} not after previous {last_t}", lineno
                    )
                last_t = t
                samples.append((t, x_m))
        return cls(samples=tuple(samples))


def closing_speed(
    first: DepthEstimate, t1: float, second: DepthEstimate, t2: float
) -> ClosingSpeedEstimate:
    """Closing speed and bounds between two depth estimates.

    Both estimates must carry lower bounds and the depth must strictly
    decrease from ``first`` to ``second``.
    """
    if not t2 > t1:
        raise ValueError(f"t2 must exceed t1 ({t1} -> {t2})")
    if not second.computed < first.computed:
        raise NotApproachingError(
            f"depth did not decrease ({first.computed} -> {second.computed})"
        )
    if first.lower is None or second.lower is None:
        raise EstimateOutOfDomainError("both estimates need lower bounds")
    dt = t2 - t1
    dx = second.computed - first.computed
    return ClosingSpeedEstimate(
        v_nom=-dx / dt,
        v_upper=-(second.lower - first.upper) / dt,
        v_lower=-(second.upper - first.lower) / dt,
        first=first,
        second=second,
        t1=t1,
        t2=t2,
        dt=dt,
        dx=dx,
    )


def _pair_residual(plan: SamplingPlan, x1: float, x1_upper: float, x2: float) -> float:
    lower, _ = depth_bounds(plan.model, x2)
    if lower is None:
        lower = 0.0
    return (1.0 + plan.epsilon) * (x1 - x2) - (x1_upper - lower)


def next_sample_depth(plan: SamplingPlan, x1: float) -> float:
    """Next sampled depth pinning the upper-bound deviation at epsilon.

    Solves ``(1+eps)(x1 - x2) = x1_upper - x2_lower`` for ``x2`` in
    ``(0, x1)``.  Raises :class:`EpsilonInfeasibleError` when no such
    depth exists (the target is already too close for the requested
    deviation).
    """
    c = bound_coefficients(plan.model)
    lds = c.lower_domain_start
    if not x1 > lds:
        raise ValueError(
            f"x1={x1} not above the lower-bound validity threshold {lds}"
        )
    _, x1_upper = depth_bounds(plan.model, x1)
    one_eps = 1.0 + plan.epsilon

    # Feasibility: the residual is strictly decreasing in x2 and negative
    # at x2 = x1; it must be positive at the domain edge (where the lower
    # bound is 0) for a root to exist.
    g_lds = one_eps * (x1 - lds) - x1_upper
    if g_lds <= 0.0:
        raise EpsilonInfeasibleError(
            f"no sampling depth in ({lds:.6g}, {x1}) attains epsilon={plan.epsilon}"
        )

    k = x1_upper - c.c0l - one_eps * x1
    qa = c.c3l - one_eps * one_eps
    qb = c.c2l - 2.0 * k * one_eps
    qc = c.c1l - k * k

    root = None
    disc = qb * qb - 4.0 * qa * qc
    if disc >= 0.0:
        sq = math.sqrt(disc)
        # Numerically stable root pair.
        q = -0.5 * (qb + math.copysign(sq, qb)) if qb != 0.0 else 0.5 * sq
        candidates = []
        if q != 0.0:
            candidates.append(qc / q)
        if qa != 0.0:
            candidates.append(q / qa)
        for cand in candidates:
            if not (lds - 1e-12 <= cand < x1):
                continue
            if k + one_eps * cand < -1e-9:
                continue  # spurious root of the squared equation
            if abs(_pair_residual(plan, x1, x1_upper, cand)) <= 1e-6 * (1.0 + x1):
                root = min(max(cand, lds), x1)
                break

    if root is None:
        root = _bisect_root(plan, x1, x1_upper, lds)

    root = _polish_root(plan, x1, x1_upper, root, lds)
    if abs(_pair_residual(plan, x1, x1_upper, root)) > _RESIDUAL_TOL * (1.0 + x1):
        raise EpsilonInfeasibleError(
            f"could not meet the sampling relation at x1={x1}, epsilon={plan.epsilon}"
        )
    return root


def _bisect_root(plan: SamplingPlan, x1: float, x1_upper: float, lds: float) -> float:
    lo, hi = lds, x1  # residual > 0 at lo, < 0 at hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _pair_residual(plan, x1, x1_upper, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _polish_root(
    plan: SamplingPlan, x1: float, x1_upper: float, x2: float, lds: float
) -> float:
    c = bound_coefficients(plan.model)
    one_eps = 1.0 + plan.epsilon
    for _ in range(6):
        g = _pair_residual(plan, x1, x1_upper, x2)
        radicand = max(c.c1l + (c.c2l + c.c3l * x2) * x2, 0.0)
        if radicand == 0.0:
            break
        dg = -one_eps + (c.c2l + 2.0 * c.c3l * x2) / (2.0 * math.sqrt(radicand))
        if dg == 0.0:
            break
        step = g / dg
        nxt = x2 - step
        if not (lds <= nxt < x1):
            break
        x2 = nxt
        if abs(step) < 1e-14 * (1.0 + x1):
            break
    return x2


class DepthSampler:
    """Online sampler: anchor a depth, emit an estimate at the first frame
    whose computed depth reaches the planned target, then re-anchor.

    Frames whose computed depth rises above the anchor re-anchor silently
    (receding target or viewpoint change).  When the planned target falls
    below the lower-bound validity domain the sampler stops scheduling and
    the last estimate stays in force.
    """

    def __init__(self, plan: SamplingPlan):
        self.plan = plan
        self._anchor: DepthEstimate | None = None
        self._anchor_t = 0.0
        self._target: float | None = None
        self._stopped = False

    @property
    def stopped(self) -> bool:
        return self._stopped

    def push(self, t: float, x_m: float) -> ClosingSpeedEstimate | None:
        return self.push_estimate(t, estimate_from_measurement(self.plan.model, x_m))

    def push_estimate(self, t: float, est: DepthEstimate) -> ClosingSpeedEstimate | None:
        if self._stopped:
            return None
        if self._anchor is None or est.computed > self._anchor.computed:
            self._set_anchor(t, est)
            return None
        if self._target is not None and est.computed <= self._target:
            if est.lower is None:
                self._stopped = True
                return None
            sample = closing_speed(self._anchor, self._anchor_t, est, t)
            self._set_anchor(t, est)
            return sample
        return None

    def _set_anchor(self, t: float, est: DepthEstimate) -> None:
        if est.lower is None:
            # Not a valid anchor yet; skip forward until one appears.
            self._anchor = None
            self._target = None
            return
        self._anchor = est
        self._anchor_t = t
        try:
            self._target = next_sample_depth(self.plan, est.computed)
        except ValueError:
            # Target would fall below the validity domain: hold here.
            self._target = None
            self._stopped = True


def sample_stream(plan: SamplingPlan, stream: DepthStream) -> list[ClosingSpeedEstimate]:
    """Fold a depth stream through the adaptive sampler.

    The first stream element always anchors; an estimate is emitted each
    time the computed depth first drops to or below the planned target.
    An empty result is valid for a stream that never reaches its first
    target.
    """
    sampler = DepthSampler(plan)
    out = []
    for t, x_m in stream.samples:
        sample = sampler.push(t, x_m)
        if sample is not None:
            out.append(sample)
    return out
