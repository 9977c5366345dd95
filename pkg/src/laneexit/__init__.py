"""Depth-uncertainty-aware conflict resolution for lane exits at T-intersections.

The package models the depth error of a stereo camera as a calibrated
quadratic polynomial, inverts measurements into bounded depth estimates,
schedules depth samples so the upper bound on the computed closing speed
stays within a chosen relative deviation, plans quadratic Bezier lane-exit
paths, and gates their execution against neighboring traffic with a
convex-hull obstacle test.  A time-stepped simulator replays neighbor
trajectories and logs full traces; the ``laneexit`` CLI exposes the
analysis and simulation entry points.
"""

from .depth import (
    BoundCoefficients,
    DepthErrorModel,
    DepthEstimate,
    MeasurementBelowOffsetError,
    bound_coefficients,
    depth_bounds,
    error_at,
    estimate_from_measurement,
    solve_depth,
)
from .sampling import (
    ClosingSpeedEstimate,
    DepthSampler,
    DepthStream,
    EpsilonInfeasibleError,
    EstimateOutOfDomainError,
    NotApproachingError,
    SamplingPlan,
    closing_speed,
    next_sample_depth,
    sample_stream,
)
from .bezier import (
    DegenerateHeadingError,
    LaneExitPath,
    LaneGeometry,
    ParallelLanesError,
    control_point_hull,
    intermediate_control_point,
)
from .conflict import (
    CenterLine,
    ConflictInputs,
    Decision,
    DecisionEvent,
    GeometryError,
    ObstacleRegion,
    Verdict,
    WaitTimeoutError,
    centerline_crossings,
    evaluate_decision,
    obstacle_region,
    regions_intersect,
    run_wait_loop,
)
from .simulate import (
    EgoMode,
    EgoState,
    MeasurementFrame,
    NeighborTrack,
    ScenarioTrace,
    TrackParseError,
    load_tracks,
    run_scenario,
    step_ego,
    synthesize_measurement,
    synthetic_track,
)
from .config import ConfigError, IntersectionConfig, ScenarioConfig, TrackSpec, load_scenario_config

__version__ = "0.1.0"
