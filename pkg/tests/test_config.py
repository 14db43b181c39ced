import json

import pytest

from magtorus.config import ConfigError, RunConfig, load_config, parse_override

BASE = """{
  "version": 1,
  "grid": {"n": 32, "h_time": 0.03125},
  "lagrangian": {"f_kind": "two_well", "params": {"f_min": -2.0}}
}"""


def test_defaults_and_speed_cap_rule():
    cfg = load_config(BASE)
    assert cfg.grid.n == 32
    assert cfg.potential_grid.n == 32
    spec = cfg.grid.spec(2.0)
    assert spec.speed_cap == pytest.approx(5.0)
    assert cfg.tolerances.tol_zero_rel == 1e-9


def test_error_reports_line():
    bad = BASE.replace('"n": 32', '"n": 4')
    with pytest.raises(ConfigError, match=r"line 3: grid.n"):
        load_config(bad)


def test_unknown_key_rejected():
    bad = BASE.replace('"version": 1,', '"version": 1, "colour": "blue",')
    with pytest.raises(ConfigError, match="colour"):
        load_config(bad)


def test_version_checked():
    with pytest.raises(ConfigError, match="version"):
        load_config(BASE.replace('"version": 1', '"version": 2'))


def test_invalid_json_line():
    with pytest.raises(ConfigError, match="line 3"):
        load_config('{\n"version": 1,\n"grid": }')


def test_overrides():
    cfg = load_config(BASE, dict([parse_override("grid.n=48"), parse_override("sweep.seed=9")]))
    assert cfg.grid.n == 48 and cfg.sweep.seed == 9
    with pytest.raises(ConfigError):
        parse_override("grid.n")


def test_oneform_lagrangian_accepted():
    text = json.dumps({"lagrangian": {"oneform": {"coeffs1": [], "coeffs2": [[-1.0, 0.0, 0, 0]]}}})
    cfg = load_config(text)
    assert cfg.lagrangian.oneform["coeffs2"][0][0] == -1.0


def test_round_trip_through_json():
    cfg = load_config(BASE)
    again = RunConfig.model_validate_json(cfg.model_dump_json())
    assert again == cfg


def test_shipped_configs_load():
    from pathlib import Path
    files = sorted((Path(__file__).parent.parent / "configs").glob("*.json"))
    assert files
    for f in files:
        load_config(f.read_text())
