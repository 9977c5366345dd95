import math

import numpy as np
import pytest

from laneexit.bezier import (
    DegenerateHeadingError,
    LaneExitPath,
    LaneGeometry,
    ParallelLanesError,
    control_point_hull,
    intermediate_control_point,
)
from laneexit.geometry import point_in_convex_polygon
from oracles import oracle_arc_length, oracle_cumulative_arc

INT1 = LaneGeometry(p_i=(2.5, -2.7), p_f=(11.65, 6.95), theta_i=0.0, theta_f=math.pi / 2)


@pytest.fixture(scope="module")
def path1():
    return LaneExitPath.from_geometry(INT1)


class TestIntermediateControlPoint:
    def test_first_intersection_exact(self):
        assert intermediate_control_point(INT1) == (11.65, -2.7)

    def test_second_intersection(self):
        geom = LaneGeometry(
            p_i=(11.65, 20.2),
            p_f=(2.98, 33.2),
            theta_i=math.pi / 2,
            theta_f=math.atan2(33.2 - 28.2, 2.98 - 11.65),
        )
        p_int = intermediate_control_point(geom)
        assert p_int[0] == pytest.approx(11.65, abs=1e-9)
        assert p_int[1] == pytest.approx(28.2, abs=1e-9)

    def test_parallel_lanes_rejected(self):
        with pytest.raises(ParallelLanesError):
            LaneGeometry(p_i=(0, 0), p_f=(1, 1), theta_i=0.3, theta_f=0.3)
        with pytest.raises(ParallelLanesError):
            LaneGeometry(p_i=(0, 0), p_f=(1, 1), theta_i=0.3, theta_f=0.3 + math.pi)

    def test_matches_tan_formula_away_from_vertical(self):
        geom = LaneGeometry(p_i=(1.0, 2.0), p_f=(9.0, -3.0), theta_i=0.3, theta_f=1.1)
        x_i, y_i = geom.p_i
        x_f, y_f = geom.p_f
        ti, tf = math.tan(geom.theta_i), math.tan(geom.theta_f)
        x_int = (y_f - y_i + x_i * ti - x_f * tf) / (ti - tf)
        y_int = y_i + (x_int - x_i) * ti
        p_int = intermediate_control_point(geom)
        assert p_int[0] == pytest.approx(x_int, abs=1e-9)
        assert p_int[1] == pytest.approx(y_int, abs=1e-9)

    def test_satisfies_both_lane_lines(self):
        geom = LaneGeometry(p_i=(-4.0, 1.5), p_f=(6.0, 8.0), theta_i=-0.7, theta_f=2.2)
        px, py = intermediate_control_point(geom)
        di = (math.cos(geom.theta_i), math.sin(geom.theta_i))
        df = (math.cos(geom.theta_f), math.sin(geom.theta_f))
        assert abs((px - geom.p_i[0]) * di[1] - (py - geom.p_i[1]) * di[0]) < 1e-9
        assert abs((px - geom.p_f[0]) * df[1] - (py - geom.p_f[1]) * df[0]) < 1e-9


class TestEvaluate:
    def test_endpoints(self, path1):
        assert path1.evaluate(0.0) == path1.p_i
        assert path1.evaluate(1.0) == path1.p_f

    def test_midpoint_expansion(self, path1):
        expected = (
            0.25 * path1.p_i[0] + 0.5 * path1.p_int[0] + 0.25 * path1.p_f[0],
            0.25 * path1.p_i[1] + 0.5 * path1.p_int[1] + 0.25 * path1.p_f[1],
        )
        assert path1.evaluate(0.5) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("tau", [-0.01, 1.01])
    def test_out_of_range_rejected(self, path1, tau):
        with pytest.raises(ValueError):
            path1.evaluate(tau)


class TestHeading:
    def test_endpoint_tangents_match_lanes(self, path1):
        assert abs(path1.heading(0.0) - INT1.theta_i) < 1e-9
        assert abs(path1.heading(1.0) - INT1.theta_f) < 1e-9

    def test_midpoint_matches_hand_derivative(self, path1):
        dx = path1.p_f[0] - path1.p_i[0]
        dy = path1.p_f[1] - path1.p_i[1]
        assert path1.heading(0.5) == pytest.approx(math.atan2(dy, dx), abs=1e-12)

    def test_cusp_rejected(self):
        path = LaneExitPath((0.0, 0.0), (2.0, 0.0), (0.0, 0.0))
        with pytest.raises(DegenerateHeadingError):
            path.heading(0.5)


class TestArcLength:
    def test_straight_path_is_chord(self):
        path = LaneExitPath((0.0, 0.0), (1.0, 0.75), (2.0, 1.5))
        chord = math.hypot(2.0, 1.5)
        assert path.arc_length == pytest.approx(chord, abs=1e-9)
        assert path.traversal_time(2.0) == pytest.approx(chord / 2.0, abs=1e-9)

    def test_matches_trapezoid_oracle(self, path1):
        oracle = oracle_arc_length(path1.p_i, path1.p_int, path1.p_f)
        assert abs(path1.arc_length - oracle) < 1e-6
        assert path1.traversal_time(7.0) == pytest.approx(oracle / 7.0, abs=1e-6)

    def test_time_scales_inversely_with_speed(self, path1):
        assert path1.traversal_time(14.0) == pytest.approx(path1.traversal_time(7.0) / 2.0)

    def test_nonpositive_speed_rejected(self, path1):
        with pytest.raises(ValueError):
            path1.traversal_time(0.0)


class TestHull:
    def test_first_intersection_triangle(self, path1):
        assert path1.hull == ((2.5, -2.7), (11.65, -2.7), (11.65, 6.95))

    def test_orientation_is_counterclockwise(self):
        # Mirrored geometry still comes out counterclockwise.
        path = LaneExitPath((0.0, 0.0), (4.0, 0.0), (4.0, -4.0))
        (ax, ay), (bx, by), (cx, cy) = path.hull
        assert (bx - ax) * (cy - ay) - (by - ay) * (cx - ax) > 0

    def test_collinear_degenerates_to_segment(self):
        hull = control_point_hull((0.0, 0.0), (1.0, 1.0), (2.0, 2.0))
        assert hull == ((0.0, 0.0), (2.0, 2.0))

    def test_curve_contained(self, path1):
        for k in range(10_001):
            tau = k / 10_000
            assert point_in_convex_polygon(path1.evaluate(tau), path1.hull, tol=1e-9)


class TestArcLengthToTau:
    def test_endpoints(self, path1):
        assert path1.arc_length_to_tau(0.0) == 0.0
        assert path1.arc_length_to_tau(path1.arc_length) == 1.0

    def test_straight_midpoint(self):
        path = LaneExitPath((0.0, 0.0), (1.0, 0.0), (2.0, 0.0))
        tau = path.arc_length_to_tau(path.arc_length / 2.0)
        assert path.evaluate(tau) == pytest.approx((1.0, 0.0), abs=1e-6)

    def test_inverts_cumulative_arc(self, path1):
        taus, cum = oracle_cumulative_arc(path1.p_i, path1.p_int, path1.p_f)
        rng = np.random.default_rng(11)
        for s in rng.uniform(0.0, path1.arc_length, 25):
            tau = path1.arc_length_to_tau(float(s))
            assert abs(float(np.interp(tau, taus, cum)) - s) < 1e-6

    def test_strictly_increasing(self, path1):
        ss = np.linspace(0.0, path1.arc_length, 100)
        taus = [path1.arc_length_to_tau(float(s)) for s in ss]
        assert all(b > a for a, b in zip(taus, taus[1:]))

    def test_out_of_range_rejected(self, path1):
        with pytest.raises(ValueError):
            path1.arc_length_to_tau(-0.1)
        with pytest.raises(ValueError):
            path1.arc_length_to_tau(path1.arc_length + 0.1)


class TestPolylineExport:
    def test_csv_schema_and_endpoints(self, path1, tmp_path):
        from laneexit.report import write_path_polyline

        out = write_path_polyline(path1, tmp_path / "path.csv", points=50)
        lines = out.read_text().splitlines()
        assert lines[0] == "tau,x_m,y_m"
        assert len(lines) == 52
        first = lines[1].split(",")
        last = lines[-1].split(",")
        assert (float(first[1]), float(first[2])) == path1.p_i
        assert (float(last[1]), float(last[2])) == path1.p_f
