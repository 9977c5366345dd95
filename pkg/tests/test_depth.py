import math

import numpy as np
import pytest

from laneexit.depth import (
    DepthErrorModel,
    DepthEstimate,
    MeasurementBelowOffsetError,
    bound_coefficients,
    depth_bounds,
    error_at,
    estimate_from_measurement,
    solve_depth,
)
from oracles import oracle_domain_start, oracle_lower_bound, oracle_upper_bound, poly_error

MODEL = DepthErrorModel(beta1=0.002797, beta2=-0.004249, beta3=0.007311, r_squared=0.9)


class TestModelValidation:
    def test_rejects_nonpositive_beta1(self):
        with pytest.raises(ValueError, match="beta1"):
            DepthErrorModel(beta1=0.0, beta2=0.0, beta3=1.0, r_squared=0.5)

    def test_rejects_nonpositive_beta3(self):
        with pytest.raises(ValueError, match="beta3"):
            DepthErrorModel(beta1=1.0, beta2=0.0, beta3=-0.1, r_squared=0.5)

    @pytest.mark.parametrize("r2", [0.0, 1.0, -0.2, 1.5])
    def test_rejects_r_squared_outside_open_interval(self, r2):
        with pytest.raises(ValueError, match="r_squared"):
            DepthErrorModel(beta1=1.0, beta2=0.0, beta3=1.0, r_squared=r2)

    def test_uncertainty_factor(self):
        assert MODEL.uncertainty_factor == pytest.approx(0.1, abs=1e-15)


class TestErrorAt:
    def test_constant_term_at_zero(self):
        assert error_at(MODEL, 0.0) == 0.007311

    def test_band_at_40m(self):
        # 43 cm uncertainty at 40 m depth for the calibrated coefficients.
        assert MODEL.uncertainty_factor * error_at(MODEL, 40.0) == pytest.approx(0.431, abs=0.01)

    def test_value_at_100m_hand_oracle(self):
        # 0.002797*1e4 - 0.004249*1e2 + 0.007311 worked out by hand.
        assert error_at(MODEL, 100.0) == pytest.approx(27.552411, abs=1e-6)

    def test_negative_depth_rejected(self):
        with pytest.raises(ValueError):
            error_at(MODEL, -1e-9)


class TestSolveDepth:
    def test_boundary_measurement_maps_to_zero(self):
        assert solve_depth(MODEL, MODEL.beta3) == 0.0

    def test_roundtrip_at_100m(self):
        x_m = 100.0 + error_at(MODEL, 100.0)
        assert solve_depth(MODEL, x_m) == pytest.approx(100.0, abs=1e-9)

    def test_below_offset_rejected(self):
        with pytest.raises(MeasurementBelowOffsetError):
            solve_depth(MODEL, MODEL.beta3 - 0.001)

    def test_roundtrip_sweep(self):
        for x in np.arange(0.0, 300.0001, 0.1):
            x_m = x + error_at(MODEL, float(x))
            assert abs(solve_depth(MODEL, x_m) - x) <= 1e-9

    def test_negative_linear_coefficient_branch(self):
        # beta2 + 1 < 0 exercises the non-rationalized branch.
        model = DepthErrorModel(beta1=0.01, beta2=-1.5, beta3=0.5, r_squared=0.9)
        for x in (60.0, 200.0):
            x_m = x + error_at(model, x)
            assert solve_depth(model, x_m) == pytest.approx(x, abs=1e-8)
        root = solve_depth(model, model.beta3)
        assert root + error_at(model, root) == pytest.approx(model.beta3, abs=1e-9)


class TestBoundCoefficients:
    def test_scale_coefficients(self):
        c = bound_coefficients(MODEL)
        assert c.c3u == pytest.approx(1.0 / 0.9, abs=1e-15)
        assert c.c3l == pytest.approx(1.0 / 1.1, abs=1e-15)
        assert c.c3u > 1.0 and c.c3l < 1.0

    def test_collapse_as_fit_becomes_perfect(self):
        model = DepthErrorModel(beta1=0.002797, beta2=-0.004249, beta3=0.007311,
                                r_squared=1.0 - 1e-12)
        c = bound_coefficients(model)
        assert c.c3u == pytest.approx(1.0, abs=1e-9)
        assert c.c3l == pytest.approx(1.0, abs=1e-9)
        assert c.c0u == pytest.approx(c.c0l, rel=1e-9)

    def test_lower_domain_start_near_zero(self):
        c = bound_coefficients(MODEL)
        assert 0.0 < c.lower_domain_start < 0.01
        assert c.lower_domain_start == pytest.approx(oracle_domain_start(MODEL), abs=1e-12)
        # The threshold is the image of the measured-depth gate.
        assert c.lower_domain_start == solve_depth(
            MODEL, MODEL.beta3 * (1.0 + MODEL.uncertainty_factor)
        )

    def test_bounds_match_root_oracle(self):
        # Bound curves recomputed independently by solving the defining
        # quadratics with numpy's eigenvalue root finder.
        for x in (0.01, 0.5, 3.0, 17.0, 40.0, 88.0, 150.0, 199.0):
            lower, upper = depth_bounds(MODEL, x)
            assert upper == pytest.approx(oracle_upper_bound(MODEL, x), abs=1e-9)
            assert lower == pytest.approx(oracle_lower_bound(MODEL, x), abs=1e-9)


class TestDepthBounds:
    def test_lower_absent_below_domain(self):
        lds = bound_coefficients(MODEL).lower_domain_start
        lower, upper = depth_bounds(MODEL, lds / 2.0)
        assert lower is None
        assert upper > 0.0

    def test_lower_bound_zero_at_domain_start(self):
        lds = bound_coefficients(MODEL).lower_domain_start
        lower, _ = depth_bounds(MODEL, lds)
        assert lower == pytest.approx(0.0, abs=1e-9)

    def test_band_at_40m(self):
        lower, upper = depth_bounds(MODEL, 40.0)
        assert lower < 40.0 < upper
        x_m = 40.0 + error_at(MODEL, 40.0)
        uf = MODEL.uncertainty_factor
        assert x_m - upper == pytest.approx((1 - uf) * error_at(MODEL, upper), abs=1e-9)
        assert x_m - lower == pytest.approx((1 + uf) * error_at(MODEL, lower), abs=1e-9)

    def test_band_collapses_with_near_perfect_fit(self):
        model = DepthErrorModel(beta1=0.002797, beta2=-0.004249, beta3=0.007311,
                                r_squared=1.0 - 1e-9)
        for x in (0.5, 10.0, 60.0, 150.0):
            lower, upper = depth_bounds(model, x)
            assert upper - lower < 1e-4 * x + 1e-4

    def test_monotone_bounds(self):
        lds = bound_coefficients(MODEL).lower_domain_start
        xs = np.arange(lds + 0.001, 200.0, 0.05)
        lowers, uppers = [], []
        for x in xs:
            lo, up = depth_bounds(MODEL, float(x))
            lowers.append(lo)
            uppers.append(up)
        assert (np.diff(np.array(lowers)) > 0).all()
        assert (np.diff(np.array(uppers)) > 0).all()

    def test_band_growth(self):
        # The lower bound rises steeply right above its validity edge, so
        # the band briefly narrows below x ~ 0.77 m; from 1 m on it grows.
        widths = []
        for x in np.arange(1.0, 200.0, 0.05):
            lo, up = depth_bounds(MODEL, float(x))
            widths.append(up - lo)
        assert (np.diff(np.array(widths)) >= -1e-12).all()

    def test_negative_depth_rejected(self):
        with pytest.raises(ValueError):
            depth_bounds(MODEL, -0.5)


class TestEstimateFromMeasurement:
    def test_boundary_estimate(self):
        est = estimate_from_measurement(MODEL, MODEL.beta3)
        assert est.computed == 0.0
        assert est.upper > 0.0
        assert est.lower is None

    def test_initial_range_measurement(self):
        est = estimate_from_measurement(MODEL, 100.0)
        assert est.lower is not None
        assert est.lower <= est.computed <= est.upper
        assert est.measured == 100.0

    def test_lower_present_iff_measurement_above_gate(self):
        gate = MODEL.beta3 * (1.0 + MODEL.uncertainty_factor)
        rng = np.random.default_rng(42)
        for x_m in rng.uniform(gate, 200.0, 1000):
            est = estimate_from_measurement(MODEL, float(x_m))
            assert est.lower is not None
            assert est.lower <= est.computed <= est.upper
        for x_m in rng.uniform(MODEL.beta3, gate * (1 - 1e-9), 200):
            assert estimate_from_measurement(MODEL, float(x_m)).lower is None
        assert estimate_from_measurement(MODEL, gate).lower is not None

    def test_defining_identities_on_grid(self):
        uf = MODEL.uncertainty_factor
        gate = MODEL.beta3 * (1.0 + uf)
        for x_m in np.arange(gate, 200.0, 1.0):
            est = estimate_from_measurement(MODEL, float(x_m))
            assert abs(x_m - est.upper - (1 - uf) * poly_error(MODEL, est.upper)) <= 1e-9
            assert abs(x_m - est.lower - (1 + uf) * poly_error(MODEL, est.lower)) <= 1e-9


class TestDepthEstimateInvariants:
    def test_rejects_disordered_bounds(self):
        with pytest.raises(ValueError):
            DepthEstimate(measured=10.0, computed=5.0, lower=6.0, upper=7.0)
        with pytest.raises(ValueError):
            DepthEstimate(measured=10.0, computed=5.0, lower=4.0, upper=4.5)

    def test_rejects_negative_depth(self):
        with pytest.raises(ValueError):
            DepthEstimate(measured=1.0, computed=-1.0, lower=None, upper=0.0)
