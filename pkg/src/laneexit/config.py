"""Scenario configuration: an INI file with flat sections per intersection.

All lengths are meters, times seconds, angles radians; numbers carry no
unit suffixes.  Every value is validated against the module invariants
before any computation starts, and errors name the offending
``section.key``.

Layout::

    [model]           beta1, beta2, beta3, r_squared
    [sampling]        epsilon
    [ego]             start = x, y; heading; speed
    [vehicle]         length, width
    [safety]          min_separation
    [sim]             tick, camera_rate_hz, camera_max_range, seed,
                      wait_timeout, measurement_noise, tail, frame_rate_hz,
                      corridor_half_width
    [tracks]          source = file | synthetic; file; scale; rotation;
                      offset = x, y   (file source only)
    [track.<id>]      start = x, y; heading; speed | speed_profile;
                      start_time; duration        (synthetic source only)
    [intersection.<n>] p_i = x, y; p_f = x, y; theta_i; theta_f;
                      centerline_point = x, y; centerline_angle;
                      neighbors = id, id, ...
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .depth import DepthErrorModel


class ConfigError(ValueError):
    """A configuration value is missing or violates an invariant."""


@dataclass
class IntersectionConfig:
    p_i: tuple[float, float]
    p_f: tuple[float, float]
    theta_i: float
    theta_f: float
    centerline_point: tuple[float, float]
    centerline_angle: float
    neighbor_ids: tuple[int, ...]


@dataclass
class TrackSpec:
    """Synthetic lane follower: constant or piecewise-constant speed."""

    vehicle_id: int
    start: tuple[float, float]
    heading: float
    speed_profile: tuple[tuple[float, float], ...]  # (elapsed s, speed m/s)
    start_time: float
    duration: float


@dataclass
class TracksConfig:
    source: str  # "file" | "synthetic"
    path: Path | None = None
    scale: float = 1.0
    rotation: float = 0.0
    offset: tuple[float, float] = (0.0, 0.0)
    specs: tuple[TrackSpec, ...] = ()
    frame_rate_hz: float = 10.0


@dataclass
class ScenarioConfig:
    model: DepthErrorModel
    epsilon: float
    d_s: float
    v_e: float
    length: float
    width: float
    tick: float
    camera_rate_hz: float
    camera_max_range: float
    seed: int
    wait_timeout: float
    measurement_noise: bool
    tail: float
    corridor_half_width: float
    ego_start: tuple[float, float]
    ego_heading: float
    intersections: list[IntersectionConfig]
    tracks: TracksConfig = field(default_factory=lambda: TracksConfig(source="synthetic"))


def _require(parser, section: str) -> None:
    if not parser.has_section(section):
        raise ConfigError(f"{section}: section missing")


def _get_float(parser, section: str, key: str, default=None) -> float:
    if not parser.has_option(section, key):
        if default is not None:
            return default
        raise ConfigError(f"{section}.{key}: value missing")
    raw = parser.get(section, key)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: not a number: {raw!r}") from None


def _get_positive(parser, section: str, key: str, default=None) -> float:
    value = _get_float(parser, section, key, default)
    if not value > 0.0:
        raise ConfigError(f"{section}.{key}: must be > 0, got {value}")
    return value


def _get_pair(parser, section: str, key: str) -> tuple[float, float]:
    if not parser.has_option(section, key):
        raise ConfigError(f"{section}.{key}: value missing")
    raw = parser.get(section, key)
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"{section}.{key}: expected 'x, y', got {raw!r}")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError:
        raise ConfigError(f"{section}.{key}: not numeric: {raw!r}") from None


def _get_bool(parser, section: str, key: str, default: bool) -> bool:
    if not parser.has_option(section, key):
        return default
    try:
        return parser.getboolean(section, key)
    except ValueError:
        raise ConfigError(f"{section}.{key}: not a boolean") from None


def load_depth_model(parser_or_path) -> DepthErrorModel:
    """Read just the [model] section (used by the analysis commands)."""
    parser = _as_parser(parser_or_path)
    _require(parser, "model")
    try:
        return DepthErrorModel(
            beta1=_get_float(parser, "model", "beta1"),
            beta2=_get_float(parser, "model", "beta2"),
            beta3=_get_float(parser, "model", "beta3"),
            r_squared=_get_float(parser, "model", "r_squared"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"model: {exc}") from None


def _as_parser(parser_or_path):
    if isinstance(parser_or_path, configparser.ConfigParser):
        return parser_or_path
    path = Path(parser_or_path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from None
    return parser


def _parse_speed_profile(parser, section: str) -> tuple[tuple[float, float], ...]:
    has_speed = parser.has_option(section, "speed")
    has_profile = parser.has_option(section, "speed_profile")
    if has_speed == has_profile:
        raise ConfigError(f"{section}: provide exactly one of speed / speed_profile")
    if has_speed:
        speed = _get_float(parser, section, "speed")
        if speed < 0.0:
            raise ConfigError(f"{section}.speed: must be >= 0, got {speed}")
        return ((0.0, speed),)
    raw = parser.get(section, "speed_profile")
    profile = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ConfigError(f"{section}.speed_profile: expected 't:speed', got {chunk!r}")
        t_raw, v_raw = chunk.split(":", 1)
        try:
            t, v = float(t_raw), float(v_raw)
        except ValueError:
            raise ConfigError(f"{section}.speed_profile: not numeric: {chunk!r}") from None
        if v < 0.0:
            raise ConfigError(f"{section}.speed_profile: speeds must be >= 0")
        profile.append((t, v))
    if not profile or profile[0][0] != 0.0:
        raise ConfigError(f"{section}.speed_profile: must start at t=0")
    for (a, _), (b, _) in zip(profile, profile[1:]):
        if not b > a:
            raise ConfigError(f"{section}.speed_profile: times must increase")
    return tuple(profile)


def load_scenario_config(path) -> ScenarioConfig:
    """Parse and validate a full scenario configuration file."""
    parser = _as_parser(path)
    base = Path(path).parent if not isinstance(path, configparser.ConfigParser) else Path(".")

    model = load_depth_model(parser)

    _require(parser, "sampling")
    epsilon = _get_positive(parser, "sampling", "epsilon")

    _require(parser, "ego")
    ego_start = _get_pair(parser, "ego", "start")
    ego_heading = _get_float(parser, "ego", "heading")
    v_e = _get_positive(parser, "ego", "speed")

    _require(parser, "vehicle")
    length = _get_positive(parser, "vehicle", "length")
    width = _get_positive(parser, "vehicle", "width")

    _require(parser, "safety")
    d_s = _get_positive(parser, "safety", "min_separation")

    tick = _get_positive(parser, "sim", "tick", 0.01) if parser.has_section("sim") else 0.01
    camera_rate = _get_positive(parser, "sim", "camera_rate_hz", 20.0) if parser.has_section("sim") else 20.0
    max_range = _get_positive(parser, "sim", "camera_max_range", 150.0) if parser.has_section("sim") else 150.0
    wait_timeout = _get_positive(parser, "sim", "wait_timeout", 30.0) if parser.has_section("sim") else 30.0
    tail = _get_float(parser, "sim", "tail", 1.0) if parser.has_section("sim") else 1.0
    corridor = _get_positive(parser, "sim", "corridor_half_width", 2.0) if parser.has_section("sim") else 2.0
    frame_rate = _get_positive(parser, "sim", "frame_rate_hz", 10.0) if parser.has_section("sim") else 10.0
    noise = _get_bool(parser, "sim", "measurement_noise", True) if parser.has_section("sim") else True
    if tail < 0.0:
        raise ConfigError(f"sim.tail: must be >= 0, got {tail}")
    seed = 0
    if parser.has_section("sim") and parser.has_option("sim", "seed"):
        raw = parser.get("sim", "seed")
        try:
            seed = int(raw)
        except ValueError:
            raise ConfigError(f"sim.seed: not an integer: {raw!r}") from None
        if seed < 0:
            raise ConfigError(f"sim.seed: must be >= 0, got {seed}")

    intersections = []
    names = sorted(
        (s for s in parser.sections() if s.startswith("intersection.")),
        key=lambda s: s.split(".", 1)[1],
    )
    for section in names:
        ids_raw = parser.get(section, "neighbors", fallback="").strip()
        try:
            neighbor_ids = tuple(int(v.strip()) for v in ids_raw.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"{section}.neighbors: not integer ids: {ids_raw!r}") from None
        inter = IntersectionConfig(
            p_i=_get_pair(parser, section, "p_i"),
            p_f=_get_pair(parser, section, "p_f"),
            theta_i=_get_float(parser, section, "theta_i"),
            theta_f=_get_float(parser, section, "theta_f"),
            centerline_point=_get_pair(parser, section, "centerline_point"),
            centerline_angle=_get_float(parser, section, "centerline_angle"),
            neighbor_ids=neighbor_ids,
        )
        if abs(math.sin(inter.theta_i - inter.theta_f)) < 1e-12:
            raise ConfigError(f"{section}: theta_i and theta_f are parallel")
        intersections.append(inter)
    if not intersections:
        raise ConfigError("intersection.*: at least one intersection required")

    tracks = _load_tracks_config(parser, base, frame_rate)

    return ScenarioConfig(
        model=model,
        epsilon=epsilon,
        d_s=d_s,
        v_e=v_e,
        length=length,
        width=width,
        tick=tick,
        camera_rate_hz=camera_rate,
        camera_max_range=max_range,
        seed=seed,
        wait_timeout=wait_timeout,
        measurement_noise=noise,
        tail=tail,
        corridor_half_width=corridor,
        ego_start=ego_start,
        ego_heading=ego_heading,
        intersections=intersections,
        tracks=tracks,
    )


def _load_tracks_config(parser, base: Path, frame_rate: float) -> TracksConfig:
    _require(parser, "tracks")
    source = parser.get("tracks", "source", fallback="").strip()
    if source not in ("file", "synthetic"):
        raise ConfigError(f"tracks.source: must be 'file' or 'synthetic', got {source!r}")
    if source == "file":
        raw = parser.get("tracks", "file", fallback="").strip()
        if not raw:
            raise ConfigError("tracks.file: value missing")
        path = Path(raw)
        if not path.is_absolute():
            path = base / path
        offset = (0.0, 0.0)
        if parser.has_option("tracks", "offset"):
            offset = _get_pair(parser, "tracks", "offset")
        return TracksConfig(
            source="file",
            path=path,
            scale=_get_float(parser, "tracks", "scale", 1.0),
            rotation=_get_float(parser, "tracks", "rotation", 0.0),
            offset=offset,
            frame_rate_hz=frame_rate,
        )
    specs = []
    for section in sorted(
        (s for s in parser.sections() if s.startswith("track.")),
        key=lambda s: s.split(".", 1)[1],
    ):
        id_raw = section.split(".", 1)[1]
        try:
            vid = int(id_raw)
        except ValueError:
            raise ConfigError(f"{section}: track id must be an integer") from None
        duration = _get_positive(parser, section, "duration")
        specs.append(
            TrackSpec(
                vehicle_id=vid,
                start=_get_pair(parser, section, "start"),
                heading=_get_float(parser, section, "heading"),
                speed_profile=_parse_speed_profile(parser, section),
                start_time=_get_float(parser, section, "start_time", 0.0),
                duration=duration,
            )
        )
    return TracksConfig(source="synthetic", specs=tuple(specs), frame_rate_hz=frame_rate)
