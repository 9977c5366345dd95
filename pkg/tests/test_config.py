import math

import pytest

from laneexit.config import ConfigError, load_depth_model, load_scenario_config


def _write(tmp_path, text):
    path = tmp_path / "scenario.ini"
    path.write_text(text)
    return path


MINIMAL = """
[model]
beta1 = 0.002797
beta2 = -0.004249
beta3 = 0.007311
r_squared = 0.9

[sampling]
epsilon = 0.2

[ego]
start = -5.0, -2.7
heading = 0.0
speed = 7.0

[vehicle]
length = 3.8
width = 1.8

[safety]
min_separation = 3.8

[tracks]
source = synthetic

[intersection.1]
p_i = 2.5, -2.7
p_f = 11.65, 6.95
theta_i = 0.0
theta_f = 1.5707963267948966
centerline_point = 30.0, 2.7
centerline_angle = 3.141592653589793
neighbors =
"""


class TestBundledScenario:
    def test_parses_and_validates(self, bundled_scenario_path):
        config = load_scenario_config(bundled_scenario_path)
        assert config.model.beta1 == 0.002797
        assert config.epsilon == 0.2
        assert config.v_e == 7.0
        assert len(config.intersections) == 2
        assert config.intersections[0].neighbor_ids == (1, 2)
        assert config.tracks.source == "synthetic"
        assert len(config.tracks.specs) == 3
        assert config.seed == 7

    def test_model_only_loader(self, bundled_scenario_path):
        model = load_depth_model(bundled_scenario_path)
        assert model.r_squared == 0.9


class TestValidation:
    def test_minimal_config_with_defaults(self, tmp_path):
        config = load_scenario_config(_write(tmp_path, MINIMAL))
        assert config.tick == 0.01
        assert config.camera_rate_hz == 20.0
        assert config.seed == 0
        assert config.measurement_noise is True

    def test_bad_beta1_names_field(self, tmp_path):
        text = MINIMAL.replace("beta1 = 0.002797", "beta1 = -1")
        with pytest.raises(ConfigError, match="beta1"):
            load_scenario_config(_write(tmp_path, text))

    def test_bad_r_squared_names_field(self, tmp_path):
        text = MINIMAL.replace("r_squared = 0.9", "r_squared = 1.0")
        with pytest.raises(ConfigError, match="r_squared"):
            load_scenario_config(_write(tmp_path, text))

    def test_zero_epsilon_rejected(self, tmp_path):
        text = MINIMAL.replace("epsilon = 0.2", "epsilon = 0.0")
        with pytest.raises(ConfigError, match="sampling.epsilon"):
            load_scenario_config(_write(tmp_path, text))

    def test_missing_section_named(self, tmp_path):
        text = MINIMAL.replace("[safety]\nmin_separation = 3.8\n", "")
        with pytest.raises(ConfigError, match="safety"):
            load_scenario_config(_write(tmp_path, text))

    def test_bad_pair_named(self, tmp_path):
        text = MINIMAL.replace("p_i = 2.5, -2.7", "p_i = 2.5")
        with pytest.raises(ConfigError, match=r"intersection\.1\.p_i"):
            load_scenario_config(_write(tmp_path, text))

    def test_no_intersections_rejected(self, tmp_path):
        text = MINIMAL.split("[intersection.1]")[0]
        with pytest.raises(ConfigError, match="intersection"):
            load_scenario_config(_write(tmp_path, text))

    def test_parallel_lane_angles_rejected(self, tmp_path):
        text = MINIMAL.replace("theta_f = 1.5707963267948966", "theta_f = 0.0")
        with pytest.raises(ConfigError, match="parallel"):
            load_scenario_config(_write(tmp_path, text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_scenario_config(tmp_path / "nope.ini")

    def test_track_requires_one_speed_form(self, tmp_path):
        text = MINIMAL + "\n[track.1]\nstart = 38.0, 2.7\nheading = 3.14159\nduration = 10.0\n"
        with pytest.raises(ConfigError, match="speed"):
            load_scenario_config(_write(tmp_path, text))

    def test_speed_profile_must_start_at_zero(self, tmp_path):
        text = (
            MINIMAL
            + "\n[track.1]\nstart = 38.0, 2.7\nheading = 3.14159\n"
            + "speed_profile = 1:4.0\nduration = 10.0\n"
        )
        with pytest.raises(ConfigError, match="speed_profile"):
            load_scenario_config(_write(tmp_path, text))

    def test_file_source_requires_path(self, tmp_path):
        text = MINIMAL.replace("source = synthetic", "source = file")
        with pytest.raises(ConfigError, match="tracks.file"):
            load_scenario_config(_write(tmp_path, text))

    def test_file_source_resolves_relative_path(self, tmp_path):
        (tmp_path / "t.csv").write_text("vehicle_id,frame,local_x_m,local_y_m\n")
        text = MINIMAL.replace("source = synthetic", "source = file\nfile = t.csv")
        config = load_scenario_config(_write(tmp_path, text))
        assert config.tracks.path == tmp_path / "t.csv"
