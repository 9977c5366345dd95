"""Stereo depth error model, inversion, and closed-form depth bounds.

The camera reports a measured depth ``x_m`` biased high by a quadratic
error polynomial of the true depth ``x``:

    f(x) = beta1*x**2 + beta2*x + beta3,      x_m = x + f(x)

Inverting the relation recovers the computed depth.  The quality of the
error fit, captured by the coefficient of determination ``r_squared``,
turns the pointwise inversion into a band: with the uncertainty factor
``u_f = 1 - r_squared``, the band edges are the roots of

    x_m - x_u = (1 - u_f) * f(x_u)        valid for every x >= 0
    x_m - x_l = (1 + u_f) * f(x_l)        valid for x_m >= beta3*(1 + u_f)

Both roots have closed forms, ``c0 + sqrt(c1 + c2*x + c3*x**2)``, whose
coefficients only depend on the model (see :func:`bound_coefficients`).
The lower edge is reported as absent below its validity threshold; callers
that need a pessimistic value substitute 0 there.

All lengths are meters.  Everything here is a pure function over frozen
inputs; values can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

_IDENTITY_TOL = 1e-9
# Radicands are mathematically >= c0**2; only rounding can push them below 0.
_RADICAND_CLAMP = -1e-12
_DOMAIN_TOL = 1e-12


class MeasurementBelowOffsetError(ValueError):
    """Measured depth below the constant error offset; inversion undefined."""


@dataclass(frozen=True)
class DepthErrorModel:
    """Calibrated quadratic depth-error polynomial plus fit quality.

    ``beta1`` [1/m] and ``beta3`` [m] must be positive: the sensor
    over-reports even at zero range and the error grows with depth.
    ``r_squared`` must lie strictly in (0, 1) so the uncertainty factor
    does too.  Validation is eager; no silent coefficient repair.
    """

    beta1: float
    beta2: float
    beta3: float
    r_squared: float

    def __post_init__(self):
        if not self.beta1 > 0.0:
            raise ValueError(f"beta1 must be > 0, got {self.beta1}")
        if not self.beta3 > 0.0:
            raise ValueError(f"beta3 must be > 0, got {self.beta3}")
        if not 0.0 < self.r_squared < 1.0:
            raise ValueError(
                f"r_squared must lie strictly in (0, 1), got {self.r_squared}"
            )

    @property
    def uncertainty_factor(self) -> float:
        return 1.0 - self.r_squared


@dataclass(frozen=True)
class BoundCoefficients:
    """Closed-form coefficients of the upper/lower depth-bound curves.

    ``lower_domain_start`` is the computed depth below which the lower
    bound is not defined; it is the image of the measured-depth threshold
    ``beta3*(1 + u_f)`` under the inversion and is always finite and
    positive.
    """

    c0u: float
    c1u: float
    c2u: float
    c3u: float
    c0l: float
    c1l: float
    c2l: float
    c3l: float
    lower_domain_start: float

    def __post_init__(self):
        if not self.c3u > 1.0:
            raise ValueError(f"c3u must exceed 1, got {self.c3u}")
        if not self.c3l < 1.0:
            raise ValueError(f"c3l must be below 1, got {self.c3l}")
        if not math.isfinite(self.lower_domain_start):
            raise ValueError("lower_domain_start must be finite")


@dataclass(frozen=True)
class DepthEstimate:
    """One measurement converted to a computed depth with its band.

    ``lower`` is None when the computed depth sits below the lower-bound
    validity domain (equivalently, when the measurement is below
    ``beta3*(1 + u_f)``).
    """

    measured: float
    computed: float
    lower: float | None
    upper: float

    def __post_init__(self):
        if self.computed < -_IDENTITY_TOL:
            raise ValueError(f"computed depth must be >= 0, got {self.computed}")
        if self.upper < self.computed - _IDENTITY_TOL:
            raise ValueError("upper bound below computed depth")
        if self.lower is not None and self.lower > self.computed + _IDENTITY_TOL:
            raise ValueError("lower bound above computed depth")


def error_at(model: DepthErrorModel, x: float) -> float:
    """Evaluate the depth-error polynomial f(x) at a computed depth."""
    if x < 0.0:
        raise ValueError(f"depth must be >= 0, got {x}")
    return (model.beta1 * x + model.beta2) * x + model.beta3


def solve_depth(model: DepthErrorModel, x_m: float) -> float:
    """Invert ``x + f(x) = x_m`` for the non-negative computed depth.

    Requires ``x_m >= beta3``; the boundary maps to exactly 0.
    """
    if x_m < model.beta3:
        raise MeasurementBelowOffsetError(
            f"measured depth {x_m} below the error offset beta3={model.beta3}"
        )
    b = model.beta2 + 1.0
    disc = b * b + 4.0 * model.beta1 * (x_m - model.beta3)
    root = math.sqrt(disc)
    if b > 0.0:
        # Rationalized form: exact at the x_m = beta3 boundary.
        return 2.0 * (x_m - model.beta3) / (b + root)
    return (-b + root) / (2.0 * model.beta1)


@lru_cache(maxsize=64)
def bound_coefficients(model: DepthErrorModel) -> BoundCoefficients:
    """Coefficients of the closed-form depth-bound curves for a model."""
    b1, b2, b3 = model.beta1, model.beta2, model.beta3
    uf = model.uncertainty_factor
    c0u = -(b2 + 1.0 - b2 * uf) / (2.0 * b1 * (1.0 - uf))
    c1u = c0u * c0u + b3 * uf / (b1 * (1.0 - uf))
    c2u = (b2 + 1.0) / (b1 * (1.0 - uf))
    c3u = 1.0 / (1.0 - uf)
    c0l = -(b2 + 1.0 + b2 * uf) / (2.0 * b1 * (1.0 + uf))
    c1l = c0l * c0l - b3 * uf / (b1 * (1.0 + uf))
    c2l = (b2 + 1.0) / (b1 * (1.0 + uf))
    c3l = 1.0 / (1.0 + uf)
    lower_domain_start = solve_depth(model, b3 * (1.0 + uf))
    return BoundCoefficients(
        c0u=c0u, c1u=c1u, c2u=c2u, c3u=c3u,
        c0l=c0l, c1l=c1l, c2l=c2l, c3l=c3l,
        lower_domain_start=lower_domain_start,
    )


def _bound_root(c0: float, c1: float, c2: float, c3: float, x: float) -> float:
    radicand = c1 + (c2 + c3 * x) * x
    if radicand < 0.0:
        if radicand < _RADICAND_CLAMP:
            raise ArithmeticError(
                f"negative bound radicand {radicand} at x={x}; corrupted coefficients"
            )
        radicand = 0.0
    return c0 + math.sqrt(radicand)


def depth_bounds(model: DepthErrorModel, x: float) -> tuple[float | None, float]:
    """Lower/upper bounds on a computed depth ``x``.

    The upper bound exists for every ``x >= 0``; the lower bound only from
    ``lower_domain_start`` upward and is returned as None below it.
    """
    if x < 0.0:
        raise ValueError(f"depth must be >= 0, got {x}")
    c = bound_coefficients(model)
    upper = _bound_root(c.c0u, c.c1u, c.c2u, c.c3u, x)
    lower = None
    if x >= c.lower_domain_start - _DOMAIN_TOL:
        lower = _bound_root(c.c0l, c.c1l, c.c2l, c.c3l, x)
    return lower, upper


def estimate_from_measurement(model: DepthErrorModel, x_m: float) -> DepthEstimate:
    """Invert a measurement and attach its depth-bound band."""
    computed = solve_depth(model, x_m)
    lower, upper = depth_bounds(model, computed)
    return DepthEstimate(measured=x_m, computed=computed, lower=lower, upper=upper)
