import json

import pytest

from vvstream import ConfigError, ScenarioConfig, validate_config
from vvstream.model import load_config, parse_rate


def test_reference_config_accepted(cfg):
    assert validate_config(cfg) is cfg
    assert cfg.L == 3
    assert cfg.layer_rates == (537.9e3, 420.3e3, 450.5e3)
    assert cfg.period == pytest.approx(2000 / 15)


def test_rsu_range_must_exceed_vehicle_range(cfg):
    bad = ScenarioConfig(**{**cfg.to_dict(), "R_u": 200.0, "R_v": 400.0,
                            "layer_rates": cfg.layer_rates})
    with pytest.raises(ConfigError, match="R_u must exceed R_v"):
        validate_config(bad)


def test_rsu_gap_must_leave_v2v_phase(cfg):
    bad = cfg.with_d(700.0)
    with pytest.raises(ConfigError, match="d must exceed 2\\*R_u"):
        validate_config(bad)


def test_v2i_rate_must_exceed_v2v_rate(cfg):
    bad = ScenarioConfig(**{**cfg.to_dict(), "r_u": 1e6, "r_v": 2e6,
                            "layer_rates": cfg.layer_rates})
    with pytest.raises(ConfigError, match="r_u must exceed r_v"):
        validate_config(bad)


@pytest.mark.parametrize("field", ["d", "R_u", "R_v", "r_u", "r_v", "rho1", "rho2", "v1", "v2"])
def test_nonpositive_quantities_rejected(cfg, field):
    data = cfg.to_dict()
    data[field] = 0.0
    with pytest.raises(ConfigError, match=f"{field} must be strictly positive"):
        validate_config(ScenarioConfig.from_dict(data))


def test_all_violations_reported_together(cfg):
    data = cfg.to_dict()
    data["R_u"] = 100.0   # below R_v and makes d <= 2R_u false? d=2000 > 200, so only one
    data["r_u"] = 0.5e6
    try:
        validate_config(ScenarioConfig.from_dict(data))
        raise AssertionError("expected ConfigError")
    except ConfigError as exc:
        assert "R_u must exceed R_v" in exc.violations
        assert "r_u must exceed r_v" in exc.violations


def test_layer_rates_must_be_present_and_positive(cfg):
    data = cfg.to_dict()
    data["layer_rates"] = []
    with pytest.raises(ConfigError, match="at least one layer"):
        validate_config(ScenarioConfig.from_dict(data))
    data["layer_rates"] = [1e6, -1.0]
    with pytest.raises(ConfigError, match="positive"):
        validate_config(ScenarioConfig.from_dict(data))


def test_json_round_trip_is_identity(cfg):
    again = ScenarioConfig.from_json(cfg.to_json())
    assert again == cfg
    assert validate_config(again) is again


def test_unknown_keys_rejected(cfg):
    data = cfg.to_dict()
    data["lanes"] = 2
    with pytest.raises(ConfigError, match="unknown config key 'lanes'"):
        ScenarioConfig.from_dict(data)


def test_missing_keys_rejected(cfg):
    data = cfg.to_dict()
    del data["rho1"]
    with pytest.raises(ConfigError, match="missing config key 'rho1'"):
        ScenarioConfig.from_dict(data)


@pytest.mark.parametrize("text,expected", [
    ("2Mb/s", 2e6),
    ("537.9kb/s", 537.9e3),
    ("450.5Kbps", 450.5e3),
    ("1e6", 1e6),
    (2e6, 2e6),
    ("3Gb/s", 3e9),
])
def test_rate_suffix_parsing(text, expected):
    assert parse_rate(text) == pytest.approx(expected)


def test_unparseable_rate_rejected():
    with pytest.raises(ConfigError):
        parse_rate("fast")


def test_load_config_applies_overrides_and_units(tmp_path, cfg):
    data = cfg.to_dict()
    data["r_u"] = "2Mb/s"
    data["layer_rates"] = ["537.9kb/s", "420.3kb/s", "450.5kb/s"]
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(data))
    loaded = load_config(str(path), overrides={"d": 4000.0})
    assert loaded.r_u == 2e6
    assert loaded.layer_rates == cfg.layer_rates
    assert loaded.d == 4000.0


def test_load_config_reports_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"d": 2000,,}')
    with pytest.raises(ConfigError, match="line 1"):
        load_config(str(path))


def test_config_is_immutable(cfg):
    with pytest.raises(Exception):
        cfg.d = 1.0
