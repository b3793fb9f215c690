import math
from pathlib import Path

import pytest
from pydantic import ValidationError

from sagnac.core.config import RunConfig, load_run_config
from sagnac.core.errors import OutputError

DEFAULT_TOML = Path(__file__).resolve().parent.parent / "config" / "default.toml"


def write_toml(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults_carry_published_values():
    config = RunConfig()
    params = config.source_params()
    assert params.pbs_pump.t_h == 0.73
    assert params.pbs_pump.r_v == 0.80
    assert params.pair_rate_per_mw == 5000.0
    detection = config.detection_config()
    assert detection.pump_power_mw == 3.28
    assert detection.coincidence_window == 1e-9
    assert detection.integration_time == 40.0
    assert config.scan.theta2_deg == [0.0, 46.0, 90.5, 135.0]
    assert config.chsh.angle_set()[0] == pytest.approx((0.0, 7.0 * math.pi / 8.0))


def test_shipped_default_file_matches_builtin_defaults():
    assert load_run_config(DEFAULT_TOML).model_dump() == RunConfig().model_dump()


def test_file_values_and_overrides(tmp_path):
    path = write_toml(tmp_path, 'seed = 5\n[pump]\npower_mw = 2.0\n[output]\ndirectory = "a"\n')
    config = load_run_config(path, seed=9, output={"directory": "b"})
    assert config.seed == 9
    assert config.pump.power_mw == 2.0
    assert config.output_dir == Path("b")


def test_unknown_key_is_rejected(tmp_path):
    path = write_toml(tmp_path, "[source]\nflux = 3\n")
    with pytest.raises(ValidationError):
        load_run_config(path)


def test_unknown_section_is_rejected(tmp_path):
    path = write_toml(tmp_path, "[laser]\npower_mw = 3\n")
    with pytest.raises(ValidationError):
        load_run_config(path)


def test_zero_efficiency_is_rejected(tmp_path):
    path = write_toml(tmp_path, "[source]\neta_v = 0.0\n")
    with pytest.raises(ValidationError):
        load_run_config(path)


def test_explicit_angles_required_without_balance(tmp_path):
    path = write_toml(tmp_path, "[pump]\nauto_balance = false\nhwp1_deg = 22.5\n")
    with pytest.raises(ValidationError):
        load_run_config(path)


def test_chsh_needs_four_pairs():
    with pytest.raises(ValidationError):
        RunConfig(chsh={"angles_deg": [[0.0, 10.0]]})


def test_slope_and_offset_go_together():
    with pytest.raises(ValidationError):
        RunConfig(dephasing={"slope": 0.01})


def test_theta1_grid_in_radians():
    grid = RunConfig().scan.theta1_grid()
    assert len(grid) == 36
    assert grid[1] == pytest.approx(math.radians(10.0))
    assert grid[-1] == pytest.approx(math.radians(350.0))


def test_missing_file_is_an_output_error(tmp_path):
    with pytest.raises(OutputError):
        load_run_config(tmp_path / "absent.toml")
