"""Time-stepped scenario execution with trajectory replay.

The ego is a point mass moving at constant forward speed while in motion;
heading is taken exactly from the active lane or path, so integration
error only affects along-path progress.  Neighbors replay piecewise
linear tracks (from file or synthetic lane followers).  Stereo frames are
synthesized at the camera rate from ground truth: the true body-frame
depth is pushed through the error polynomial plus seeded uniform noise
inside the model's uncertainty band, so every draw stays within the
depth-bound band by construction; the lateral offset is reported exactly.

The run is deterministic given the configuration and seed: one logical
thread, measurements ordered by vehicle id, and a fixed tick.  Waiting at
an entry point sets the speed to zero instantly (braking is abstracted
away) and re-evaluates the conflict gate every tick; once a proceed
verdict is issued the maneuver is committed and never revisited.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple

from .bezier import LaneExitPath, LaneGeometry
from .config import ConfigError, ScenarioConfig, TrackSpec, TracksConfig
from .conflict import (
    CenterLine,
    ConflictInputs,
    Decision,
    ObstacleRegion,
    Verdict,
    centerline_crossings,
    evaluate_decision,
    obstacle_region,
)
from .depth import DepthErrorModel, DepthEstimate, error_at, estimate_from_measurement
from .geometry import Point, to_body, to_world
from .sampling import ClosingSpeedEstimate, DepthSampler, SamplingPlan

_EPS = 1e-12
_TRACK_HEADER = ["vehicle_id", "frame", "local_x_m", "local_y_m"]


class TrackParseError(ValueError):
    """A trajectory CSV could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class EgoMode(Enum):
    LANE_FOLLOW = "lane_follow"
    WAITING = "waiting"
    EXECUTING = "executing"


@dataclass(frozen=True)
class EgoState:
    position: Point
    heading: float
    speed: float
    mode: EgoMode
    path: LaneExitPath | None = None
    progress_s: float = 0.0

    def __post_init__(self):
        if self.speed < 0.0:
            raise ValueError(f"speed must be >= 0, got {self.speed}")
        if self.mode is EgoMode.WAITING and self.speed != 0.0:
            raise ValueError("waiting requires speed exactly 0")
        if self.path is not None and not 0.0 <= self.progress_s <= self.path.arc_length + _EPS:
            raise ValueError("progress outside the path length")


def step_ego(state: EgoState, dt: float) -> EgoState:
    """Advance the ego by one tick.

    Lane following moves straight along the heading; waiting holds;
    executing advances arc length along the path and hands over to lane
    following on the exit lane when the path completes (any leftover step
    distance is carried onto the exit lane).
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if state.mode is EgoMode.WAITING:
        return state
    if state.mode is EgoMode.LANE_FOLLOW:
        c, s = math.cos(state.heading), math.sin(state.heading)
        step = state.speed * dt
        return replace(
            state,
            position=(state.position[0] + step * c, state.position[1] + step * s),
        )
    path = state.path
    if path is None:
        raise ValueError("executing mode requires a path")
    progress = state.progress_s + state.speed * dt
    if progress >= path.arc_length - _EPS:
        leftover = max(progress - path.arc_length, 0.0)
        heading = path.heading(1.0)
        c, s = math.cos(heading), math.sin(heading)
        return EgoState(
            position=(path.p_f[0] + leftover * c, path.p_f[1] + leftover * s),
            heading=heading,
            speed=state.speed,
            mode=EgoMode.LANE_FOLLOW,
        )
    tau = path.arc_length_to_tau(progress)
    return replace(
        state,
        position=path.evaluate(tau),
        heading=path.heading(tau),
        progress_s=progress,
    )


@dataclass(frozen=True)
class MeasurementFrame:
    """One stereo frame: measured depth/lateral plus the producing ego pose."""

    t: float
    vehicle_id: int
    x_m: float
    y_m: float
    ego_position: Point
    ego_heading: float


def synthesize_measurement(
    model: DepthErrorModel,
    ego: EgoState,
    neighbor_position: Point,
    rng: random.Random | None,
    max_range: float = 150.0,
    t: float = 0.0,
    vehicle_id: int = 0,
) -> MeasurementFrame | None:
    """Map a true neighbor position through the camera error model.

    Returns None when the neighbor is behind the ego heading plane or
    beyond the configured range.  With ``rng`` set, uniform noise inside
    the +-u_f*f(x) band is added to the depth; the lateral offset is
    noise-free.  The measured depth never drops below the error offset.
    """
    x, y = to_body(ego.position, ego.heading, neighbor_position)
    if x <= 0.0 or x > max_range:
        return None
    fx = error_at(model, x)
    eta = 0.0
    if rng is not None:
        eta = rng.uniform(-1.0, 1.0) * model.uncertainty_factor * fx
    x_m = max(x + fx + eta, model.beta3)
    return MeasurementFrame(
        t=t,
        vehicle_id=vehicle_id,
        x_m=x_m,
        y_m=y,
        ego_position=ego.position,
        ego_heading=ego.heading,
    )


@dataclass(frozen=True)
class NeighborTrack:
    """Replayed trajectory: piecewise-linear between samples, absent outside."""

    vehicle_id: int
    samples: tuple[tuple[float, float, float], ...]  # (t, x, y)

    def __post_init__(self):
        ts = [t for t, _, _ in self.samples]
        for a, b in zip(ts, ts[1:]):
            if not b > a:
                raise ValueError(
                    f"track {self.vehicle_id}: timestamps must increase ({a} -> {b})"
                )

    @property
    def t_start(self) -> float:
        return self.samples[0][0]

    @property
    def t_end(self) -> float:
        return self.samples[-1][0]

    def position_at(self, t: float) -> Point | None:
        if not self.samples or t < self.t_start - _EPS or t > self.t_end + _EPS:
            return None
        lo, hi = 0, len(self.samples) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.samples[mid][0] <= t:
                lo = mid
            else:
                hi = mid
        t0, x0, y0 = self.samples[lo]
        t1, x1, y1 = self.samples[hi]
        if hi == lo or t <= t0:
            return (x0, y0)
        if t >= t1:
            return (x1, y1)
        w = (t - t0) / (t1 - t0)
        return (x0 + w * (x1 - x0), y0 + w * (y1 - y0))


def synthetic_track(spec: TrackSpec, frame_rate_hz: float) -> NeighborTrack:
    """Sample a straight-lane follower with a piecewise-constant speed."""
    if not frame_rate_hz > 0.0:
        raise ValueError("frame rate must be > 0")
    c, s = math.cos(spec.heading), math.sin(spec.heading)
    n = int(round(spec.duration * frame_rate_hz))
    samples = []
    for k in range(n + 1):
        dt_total = k / frame_rate_hz
        dist = _profile_distance(spec.speed_profile, dt_total)
        samples.append(
            (spec.start_time + dt_total, spec.start[0] + dist * c, spec.start[1] + dist * s)
        )
    return NeighborTrack(vehicle_id=spec.vehicle_id, samples=tuple(samples))


def _profile_distance(profile, elapsed: float) -> float:
    dist = 0.0
    for i, (t0, v) in enumerate(profile):
        t1 = profile[i + 1][0] if i + 1 < len(profile) else elapsed
        if elapsed <= t0:
            break
        dist += v * (min(elapsed, t1) - t0)
    return dist


def load_tracks(path, frame_rate_hz: float = 10.0) -> list[NeighborTrack]:
    """Read trajectory CSV (``vehicle_id,frame,local_x_m,local_y_m``).

    Frame indices convert to seconds through ``frame_rate_hz``.  Rows for
    one vehicle must appear with strictly increasing frames; violations
    are reported with their line number.
    """
    if not frame_rate_hz > 0.0:
        raise ValueError("frame rate must be > 0")
    per_vehicle: dict[int, list[tuple[float, float, float]]] = {}
    last_frame: dict[int, tuple[int, int]] = {}  # vid -> (frame, line)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if [h.strip() for h in header] != _TRACK_HEADER:
            raise TrackParseError(
                f"expected header {','.join(_TRACK_HEADER)}, got {','.join(header)}", 1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise TrackParseError(f"expected 4 columns, got {len(row)}", lineno)
            try:
                vid = int(row[0])
                frame = int(row[1])
                x, y = float(row[2]), float(row[3])
            except ValueError:
                raise TrackParseError(f"malformed row {row}", lineno) from None
            if vid in last_frame:
                prev_frame, prev_line = last_frame[vid]
                if frame == prev_frame:
                    raise TrackParseError(
                        f"duplicated frame {frame} for vehicle {vid} "
                        f"(first seen on line {prev_line})",
                        lineno,
                    )
                if frame < prev_frame:
                    raise TrackParseError(
                        f"non-monotone frame {frame} for vehicle {vid} "
                        f"(previous {prev_frame} on line {prev_line})",
                        lineno,
                    )
            last_frame[vid] = (frame, lineno)
            per_vehicle.setdefault(vid, []).append((frame / frame_rate_hz, x, y))
    return [
        NeighborTrack(vehicle_id=vid, samples=tuple(samples))
        for vid, samples in sorted(per_vehicle.items())
    ]


# --- trace records -----------------------------------------------------------


class EgoRow(NamedTuple):
    t: float
    x: float
    y: float
    heading: float
    speed: float
    mode: str


class NeighborRow(NamedTuple):
    t: float
    vehicle_id: int
    x: float
    y: float


class MeasurementRow(NamedTuple):
    t: float
    vehicle_id: int
    x_m: float
    y_m: float
    computed: float
    lower: float | None
    upper: float


class SpeedRow(NamedTuple):
    t: float
    vehicle_id: int
    v_nom: float
    v_upper: float
    v_lower: float
    x1: float
    x2: float
    dt: float


class DecisionRow(NamedTuple):
    t: float
    intersection: int
    vehicle_id: int
    d_v1: int
    d_v2: int
    verdict: str
    x_n: float | None
    v_upper: float | None


class DistanceRow(NamedTuple):
    t: float
    vehicle_id: int
    distance: float


class NeighborSnapshot(NamedTuple):
    vehicle_id: int
    s_n: float
    v_upper: float | None
    decision: Decision
    region: ObstacleRegion
    estimate: DepthEstimate


@dataclass(frozen=True)
class CommitRecord:
    """Proceed verdict for one intersection, with inputs for auditing."""

    intersection: int
    t_arrive: float
    t_commit: float
    ego_speed: float
    t_c: float
    hull: tuple[Point, ...]
    neighbors: tuple[NeighborSnapshot, ...]

    @property
    def wait_duration(self) -> float:
        return self.t_commit - self.t_arrive


@dataclass
class ScenarioTrace:
    seed: int
    ego: list[EgoRow] = field(default_factory=list)
    neighbors: list[NeighborRow] = field(default_factory=list)
    measurements: list[MeasurementRow] = field(default_factory=list)
    speed_estimates: list[SpeedRow] = field(default_factory=list)
    decisions: list[DecisionRow] = field(default_factory=list)
    distances: list[DistanceRow] = field(default_factory=list)
    commits: list[CommitRecord] = field(default_factory=list)
    completed: bool = True
    timeout_intersection: int | None = None
    end_time: float = 0.0

    @property
    def min_separation(self) -> float | None:
        if not self.distances:
            return None
        return min(row.distance for row in self.distances)

    @property
    def total_wait(self) -> float:
        return sum(c.wait_duration for c in self.commits)


@dataclass
class _IntersectionRuntime:
    index: int  # 1-based
    cfg_neighbors: tuple[int, ...]
    path: LaneExitPath
    centerline: CenterLine
    inputs: ConflictInputs


def build_tracks(cfg: ScenarioConfig) -> dict[int, NeighborTrack]:
    """Materialize neighbor tracks from the configured source."""
    tracks_cfg: TracksConfig = cfg.tracks
    if tracks_cfg.source == "synthetic":
        tracks = [synthetic_track(s, tracks_cfg.frame_rate_hz) for s in tracks_cfg.specs]
    else:
        loaded = load_tracks(tracks_cfg.path, tracks_cfg.frame_rate_hz)
        tracks = [_transform_track(t, tracks_cfg) for t in loaded]
    return {t.vehicle_id: t for t in tracks}


def _transform_track(track: NeighborTrack, tc: TracksConfig) -> NeighborTrack:
    if tc.scale == 1.0 and tc.rotation == 0.0 and tc.offset == (0.0, 0.0):
        return track
    c, s = math.cos(tc.rotation), math.sin(tc.rotation)
    samples = tuple(
        (
            t,
            tc.scale * (c * x - s * y) + tc.offset[0],
            tc.scale * (s * x + c * y) + tc.offset[1],
        )
        for t, x, y in track.samples
    )
    return NeighborTrack(vehicle_id=track.vehicle_id, samples=samples)


class ScenarioRunner:
    """Deterministic single-thread execution of one configured scenario."""

    def __init__(self, config: ScenarioConfig):
        self.cfg = config
        self.plan = SamplingPlan(epsilon=config.epsilon, model=config.model)
        self.tracks = build_tracks(config)
        self.inters = self._build_intersections()
        self._validate_route()
        self._validate_corridors()
        self.staleness = 2.0 / config.camera_rate_hz

    def _build_intersections(self) -> list[_IntersectionRuntime]:
        out = []
        for i, ic in enumerate(self.cfg.intersections, start=1):
            geom = LaneGeometry(p_i=ic.p_i, p_f=ic.p_f, theta_i=ic.theta_i, theta_f=ic.theta_f)
            path = LaneExitPath.from_geometry(geom)
            centerline = CenterLine(point=ic.centerline_point, angle=ic.centerline_angle)
            try:
                x_p1, x_p2 = centerline_crossings(path.p_i, path.p_int, path.p_f, centerline)
            except ValueError as exc:
                raise ConfigError(f"intersection.{i}: {exc}") from None
            inputs = ConflictInputs(
                hull=path.hull,
                centerline=centerline,
                x_p1=x_p1,
                x_p2=x_p2,
                d_s=self.cfg.d_s,
                v_e=self.cfg.v_e,
                t_c=path.traversal_time(self.cfg.v_e),
            )
            for vid in ic.neighbor_ids:
                if vid not in self.tracks:
                    raise ConfigError(f"intersection.{i}: unknown neighbor id {vid}")
            out.append(
                _IntersectionRuntime(
                    index=i,
                    cfg_neighbors=tuple(sorted(ic.neighbor_ids)),
                    path=path,
                    centerline=centerline,
                    inputs=inputs,
                )
            )
        return out

    def _validate_route(self) -> None:
        pos = self.cfg.ego_start
        heading = self.cfg.ego_heading
        for i, rt in enumerate(self.inters, start=1):
            ic = self.cfg.intersections[i - 1]
            if abs(math.sin(heading - ic.theta_i)) > 1e-9:
                raise ConfigError(
                    f"intersection.{i}: approach heading {heading} does not match theta_i"
                )
            c, s = math.cos(heading), math.sin(heading)
            dx, dy = ic.p_i[0] - pos[0], ic.p_i[1] - pos[1]
            if abs(-s * dx + c * dy) > 1e-6:
                raise ConfigError(f"intersection.{i}: p_i is not on the approach lane")
            if c * dx + s * dy < -1e-9:
                raise ConfigError(f"intersection.{i}: p_i lies behind the approach start")
            pos = ic.p_f
            heading = ic.theta_f

    def _validate_corridors(self) -> None:
        for i, rt in enumerate(self.inters, start=1):
            for vid in rt.cfg_neighbors:
                track = self.tracks[vid]
                worst = max(
                    abs(rt.centerline.lateral((x, y))) for _, x, y in track.samples
                )
                if worst > self.cfg.corridor_half_width:
                    raise ConfigError(
                        f"intersection.{i}: track {vid} strays {worst:.3f} m from the "
                        f"lane centerline (corridor half-width "
                        f"{self.cfg.corridor_half_width})"
                    )

    # -- execution -------------------------------------------------------

    def run(self) -> ScenarioTrace:
        cfg = self.cfg
        dt = cfg.tick
        rng = random.Random(cfg.seed) if cfg.measurement_noise else None
        trace = ScenarioTrace(seed=cfg.seed)

        ego = EgoState(
            position=cfg.ego_start,
            heading=cfg.ego_heading,
            speed=cfg.v_e,
            mode=EgoMode.LANE_FOLLOW,
        )
        samplers = {vid: DepthSampler(self.plan) for vid in self.tracks}
        latest_frame: dict[int, MeasurementFrame] = {}
        latest_estimate: dict[int, DepthEstimate] = {}
        latest_speed: dict[int, ClosingSpeedEstimate] = {}

        inter_idx = 0  # next intersection to handle (0-based)
        t_arrive: float | None = None
        done_t: float | None = None
        frame_idx = 0
        k = 0
        ordered_ids = sorted(self.tracks)

        while True:
            t = k * dt

            # Record state at t.
            trace.ego.append(
                EgoRow(t, ego.position[0], ego.position[1], ego.heading, ego.speed, ego.mode.value)
            )
            active = {}
            for vid in ordered_ids:
                pos = self.tracks[vid].position_at(t)
                if pos is None:
                    continue
                active[vid] = pos
                trace.neighbors.append(NeighborRow(t, vid, pos[0], pos[1]))
                trace.distances.append(
                    DistanceRow(t, vid, math.hypot(pos[0] - ego.position[0], pos[1] - ego.position[1]))
                )

            if done_t is not None and t >= done_t + cfg.tail - 1e-9:
                trace.end_time = t
                break

            # Camera frames due at or before t.
            while frame_idx / cfg.camera_rate_hz <= t + 1e-9:
                for vid in ordered_ids:
                    pos = active.get(vid)
                    if pos is None:
                        continue
                    frame = synthesize_measurement(
                        cfg.model, ego, pos, rng,
                        max_range=cfg.camera_max_range, t=t, vehicle_id=vid,
                    )
                    if frame is None:
                        continue
                    est = estimate_from_measurement(cfg.model, frame.x_m)
                    latest_frame[vid] = frame
                    latest_estimate[vid] = est
                    trace.measurements.append(
                        MeasurementRow(t, vid, frame.x_m, frame.y_m, est.computed, est.lower, est.upper)
                    )
                    sample = samplers[vid].push_estimate(t, est)
                    if sample is not None:
                        latest_speed[vid] = sample
                        trace.speed_estimates.append(
                            SpeedRow(
                                t, vid, sample.v_nom, sample.v_upper, sample.v_lower,
                                sample.first.computed, sample.second.computed, sample.dt,
                            )
                        )
                frame_idx += 1

            # Gate re-evaluation while waiting.
            if ego.mode is EgoMode.WAITING:
                rows, proceed, snaps = self._evaluate_gate(
                    inter_idx, t, latest_frame, latest_estimate, latest_speed
                )
                trace.decisions.extend(rows)
                if proceed:
                    trace.commits.append(
                        CommitRecord(
                            intersection=inter_idx + 1,
                            t_arrive=t_arrive,
                            t_commit=t,
                            ego_speed=ego.speed,
                            t_c=self.inters[inter_idx].inputs.t_c,
                            hull=self.inters[inter_idx].path.hull,
                            neighbors=tuple(snaps),
                        )
                    )
                    ego = EgoState(
                        position=ego.position,
                        heading=ego.heading,
                        speed=cfg.v_e,
                        mode=EgoMode.EXECUTING,
                        path=self.inters[inter_idx].path,
                        progress_s=0.0,
                    )
                elif t - t_arrive >= cfg.wait_timeout - 1e-9:
                    trace.completed = False
                    trace.timeout_intersection = inter_idx + 1
                    trace.end_time = t
                    break

            # Motion.
            if ego.mode is EgoMode.LANE_FOLLOW and inter_idx < len(self.inters):
                target = self.inters[inter_idx].path.p_i
                c, s = math.cos(ego.heading), math.sin(ego.heading)
                remaining = (target[0] - ego.position[0]) * c + (target[1] - ego.position[1]) * s
                step = ego.speed * dt
                if step < remaining - _EPS:
                    ego = step_ego(ego, dt)
                else:
                    leftover = max(step - remaining, 0.0)
                    ego = replace(ego, position=target)
                    t_arrive = t
                    rows, proceed, snaps = self._evaluate_gate(
                        inter_idx, t, latest_frame, latest_estimate, latest_speed
                    )
                    trace.decisions.extend(rows)
                    if proceed:
                        trace.commits.append(
                            CommitRecord(
                                intersection=inter_idx + 1,
                                t_arrive=t,
                                t_commit=t,
                                ego_speed=ego.speed,
                                t_c=self.inters[inter_idx].inputs.t_c,
                                hull=self.inters[inter_idx].path.hull,
                                neighbors=tuple(snaps),
                            )
                        )
                        path = self.inters[inter_idx].path
                        ego = EgoState(
                            position=target,
                            heading=path.heading(0.0),
                            speed=cfg.v_e,
                            mode=EgoMode.EXECUTING,
                            path=path,
                            progress_s=0.0,
                        )
                        if leftover > 0.0:
                            ego = step_ego(ego, leftover / cfg.v_e)
                    else:
                        ego = EgoState(
                            position=target,
                            heading=ego.heading,
                            speed=0.0,
                            mode=EgoMode.WAITING,
                        )
            elif ego.mode is EgoMode.EXECUTING:
                before = ego
                ego = step_ego(ego, dt)
                if before.mode is EgoMode.EXECUTING and ego.mode is EgoMode.LANE_FOLLOW:
                    inter_idx += 1
                    if inter_idx >= len(self.inters):
                        done_t = t + dt
            elif ego.mode is EgoMode.LANE_FOLLOW:
                ego = step_ego(ego, dt)
            # WAITING: stationary.

            k += 1

        return trace

    def _evaluate_gate(self, inter_idx: int, t: float, latest_frame, latest_estimate, latest_speed):
        """Per-neighbor certificates; proceed only if every active
        candidate individually allows it."""
        rt = self.inters[inter_idx]
        rows: list[DecisionRow] = []
        snaps: list[NeighborSnapshot] = []
        all_proceed = True
        for vid in rt.cfg_neighbors:
            if self.tracks[vid].position_at(t) is None:
                continue  # not in the scene right now
            frame = latest_frame.get(vid)
            fresh = frame is not None and (t - frame.t) <= self.staleness + 1e-9
            if not fresh:
                rows.append(
                    DecisionRow(t, rt.index, vid, -1, -1, Verdict.WAIT.value, None, None)
                )
                all_proceed = False
                continue
            est = latest_estimate[vid]
            region = obstacle_region(
                (frame.ego_position, frame.ego_heading),
                est,
                frame.y_m,
                (self.cfg.length, self.cfg.width),
            )
            measured_pos = to_world(
                frame.ego_position, frame.ego_heading, (est.computed, frame.y_m)
            )
            s_n = rt.centerline.along(measured_pos)
            speed_est = latest_speed.get(vid)
            v_upper = speed_est.v_upper if speed_est is not None else None
            decision = evaluate_decision(rt.inputs, s_n, region, v_upper, t)
            rows.append(
                DecisionRow(
                    t, rt.index, vid, decision.d_v1, decision.d_v2,
                    decision.verdict.value, s_n, v_upper,
                )
            )
            snaps.append(NeighborSnapshot(vid, s_n, v_upper, decision, region, est))
            if decision.verdict is not Verdict.PROCEED:
                all_proceed = False
        return rows, all_proceed, snaps


def run_scenario(config: ScenarioConfig) -> ScenarioTrace:
    """Execute a validated scenario configuration deterministically."""
    return ScenarioRunner(config).run()
