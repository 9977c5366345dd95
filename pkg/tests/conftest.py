import math
from pathlib import Path

import pytest

from laneexit.config import IntersectionConfig, ScenarioConfig, TrackSpec, TracksConfig
from laneexit.depth import DepthErrorModel

REPO_ROOT = Path(__file__).resolve().parent.parent
BUNDLED_SCENARIO = REPO_ROOT / "scenarios" / "two_intersection.ini"

FIELD_MODEL = DepthErrorModel(beta1=0.002797, beta2=-0.004249, beta3=0.007311, r_squared=0.9)


def single_intersection_config(
    neighbor_start_x=38.0,
    neighbor_speed=8.0,
    seed=1,
    noise=True,
    ego_start=(-5.0, -2.7),
    wait_timeout=40.0,
    track_duration=None,
    neighbor_ids=(1,),
    tail=0.0,
):
    """First T-intersection with one westbound neighbor on y = 2.7."""
    if track_duration is None:
        track_duration = (neighbor_start_x + 30.0) / max(neighbor_speed, 0.5)
    spec = TrackSpec(
        vehicle_id=1,
        start=(neighbor_start_x, 2.7),
        heading=math.pi,
        speed_profile=((0.0, neighbor_speed),),
        start_time=0.0,
        duration=track_duration,
    )
    return ScenarioConfig(
        model=FIELD_MODEL,
        epsilon=0.2,
        d_s=3.8,
        v_e=7.0,
        length=3.8,
        width=1.8,
        tick=0.01,
        camera_rate_hz=20.0,
        camera_max_range=150.0,
        seed=seed,
        wait_timeout=wait_timeout,
        measurement_noise=noise,
        tail=tail,
        corridor_half_width=2.0,
        ego_start=ego_start,
        ego_heading=0.0,
        intersections=[
            IntersectionConfig(
                p_i=(2.5, -2.7),
                p_f=(11.65, 6.95),
                theta_i=0.0,
                theta_f=math.pi / 2,
                centerline_point=(30.0, 2.7),
                centerline_angle=math.pi,
                neighbor_ids=neighbor_ids,
            )
        ],
        tracks=TracksConfig(source="synthetic", specs=(spec,), frame_rate_hz=20.0),
    )


@pytest.fixture
def bundled_scenario_path():
    assert BUNDLED_SCENARIO.exists()
    return BUNDLED_SCENARIO
