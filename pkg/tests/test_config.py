import pytest

from chronon.config import ConfigError, RunConfig, load_config
from chronon.models import DiscreteDelay, Front


def write(tmp_path, text):
    p = tmp_path / "run.toml"
    p.write_text(text)
    return p


def test_defaults_are_reference():
    cfg = load_config(env={})
    assert (cfg.grid.n_points, cfg.well.v0, cfg.well.v1) == (2048, 200.0, 400.0)
    assert cfg.detector_width == pytest.approx(0.02)
    assert cfg.experiment_width == pytest.approx(0.02)


def test_dotted_keys_and_env_override(tmp_path):
    p = write(tmp_path, 'well.v1 = 300\nmodel.kind = "delay"\nscan.positions = [0.2, 0.4]\n')
    cfg = load_config(p, env={"CHRONON_WELL__V1": "350.5", "CHRONON_MODEL__V": "0.25", "OTHER": "x"})
    assert cfg.well.v1 == 350.5
    assert cfg.model.v == 0.25
    assert cfg.model.kind == "delay"
    assert cfg.scan.positions == [0.2, 0.4]


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError, match="well.width"):
        load_config(write(tmp_path, "well.width = 2\n"), env={})
    with pytest.raises(ConfigError, match="section"):
        load_config(write(tmp_path, "nope.x = 1\n"), env={})
    with pytest.raises(ConfigError, match="number"):
        load_config(write(tmp_path, 'well.v0 = "high"\n'), env={})


def test_bad_toml_and_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="TOML"):
        load_config(write(tmp_path, "well.v0 = = 1\n"), env={})
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.toml", env={})


@pytest.mark.parametrize(
    "section, key, value, command, message",
    [
        ("experiment", "t_y", 1.0, "experiment", "l/c < t_y < L/c"),
        ("experiment", "t_y", 0.4, "experiment", "l/c < t_y < L/c"),
        ("experiment", "t_x", 0.6, "experiment", "t_x < l/c"),
        ("model", "v", 1.5, "paradox", "c_sim"),
        ("model", "growth_speed", 2.0, "signal", "c_sim"),
        ("grid", "margin", 1.0, "eigen", "margin"),
        ("grid", "n_points", 200, "eigen", "under-resolved"),
        ("signal", "n", 1001, "signal", "even"),
        ("vbound", "schedule", [1.0, 0.5], "vbound", "strictly increasing"),
        ("evolution", "dt", 0.0, "evolve", "dt"),
    ],
)
def test_cross_field_validation(section, key, value, command, message):
    cfg = RunConfig.from_dict({section: {key: value}})
    with pytest.raises(ConfigError, match=message):
        cfg.validate(command)


def test_presets():
    strong = load_config(env={}, preset="strong")
    assert strong.well.v1 == 5.0 and strong.grid.margin == 3.0
    with pytest.raises(ConfigError):
        load_config(env={}, preset="nope")


def test_model_construction():
    cfg = RunConfig()
    assert isinstance(cfg.make_model(), Front)
    assert cfg.make_model("local").d_max == pytest.approx(0.25)
    assert isinstance(cfg.make_model("delay", l_prime=1.2), DiscreteDelay)
    with pytest.raises(ConfigError):
        cfg.make_model("delay")
