from __future__ import annotations

from pathlib import Path

import pytest

from app.dynamics.potentials import Const
from app.dynamics.pressure import SeparatedPool
from app.dynamics.rational_map import Metric
from app.shared import messages
from app.shared.config import get_settings
from app.shared.config_loader import apply_overrides, load_config, parse_config
from app.shared.exceptions import ConfigError


@pytest.fixture()
def z2_text(z2_config_file: Path) -> str:
    return z2_config_file.read_text(encoding="utf-8")


def test_valid_config(z2_config_file, z2):
    config = load_config(z2_config_file)
    assert config.map == z2
    assert config.map.fingerprint == z2.fingerprint
    assert config.potential.potential == Const(value=0.0)
    assert config.run.alpha == 0.5
    assert config.run.c_schedule == [1.0, 0.5]
    assert config.run.ns == list(range(1, 13))
    assert config.sample.count == 4000
    assert config.metric == Metric.euclidean
    assert config.output.formats == ["csv", "json"]


def test_defaults_apply_to_missing_sections():
    config = parse_config("[map]\nnumerator = [-1, 0, 1]\n")
    assert config.run.alpha == 0.2
    assert config.run.c_schedule == [1.0, 0.5, 0.25]
    assert config.potential.expression == "const(0.0)"


def test_rational_map_defaults_to_chordal_metric():
    config = parse_config("[map]\nnumerator = [1]\ndenominator = [0, 0, 1]\n\n[run]\nn_range = [1, 4]\n")
    assert config.metric == Metric.chordal


@pytest.mark.parametrize(
    ("old", "new", "line", "fragment"),
    [
        ("c_schedule = [1.0, 0.5]", "c_schedule = [0.5, 1.0]", 10, messages.C_SCHEDULE_NOT_DESCENDING),
        ("c_schedule = [1.0, 0.5]", "c_schedule = [1.0, 1.5]", 10, messages.C_SCHEDULE_OUT_OF_RANGE),
        ("alpha = 0.5", "alpha = 0.0", 9, messages.ALPHA_NOT_POSITIVE),
        ("n_range = [1, 12]", "n_range = [1, 20]", 11, messages.N_RANGE_OVER_BUDGET),
        ("n_range = [1, 12]", "n_range = [5, 2]", 11, messages.N_RANGE_INVALID),
        ("epsilon_schedule = [0.05]", "epsilon_schedule = [0.05, -1]", 12, messages.EPSILON_NOT_POSITIVE),
        ('expression = "const(0.0)"', 'expression = "bogus"', 6, "unknown potential"),
        ("window = 4", "window = 4\nfoo = 1", 14, "Extra inputs are not permitted"),
        ("numerator = [0, 0, 1]", "numerator = [0, 1]", 1, messages.DEGREE_TOO_LOW),
    ],
)
def test_invalid_values_report_their_line(z2_text, old, new, line, fragment):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(z2_text.replace(old, new))
    assert fragment in excinfo.value.message
    assert excinfo.value.line == line
    assert str(excinfo.value).startswith(f"line {line}")


def test_error_names_the_field(z2_text):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(z2_text.replace("alpha = 0.5", "alpha = -1"))
    assert excinfo.value.message.startswith("run.alpha:")


def test_syntax_error_has_position(z2_text):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(z2_text.replace("alpha = 0.5", "alpha = "))
    assert excinfo.value.message.startswith("syntax error")
    assert excinfo.value.line == 9


def test_missing_map_section():
    with pytest.raises(ConfigError) as excinfo:
        parse_config("[run]\nalpha = 0.5\n")
    assert "missing [map]" in excinfo.value.message
    assert excinfo.value.line == 1


def test_budget_follows_settings(z2_text, monkeypatch):
    monkeypatch.setenv("MAX_PERIODIC_POINTS", str(2**8))
    get_settings.cache_clear()
    with pytest.raises(ConfigError):
        parse_config(z2_text)
    assert parse_config(z2_text.replace("n_range = [1, 12]", "n_range = [1, 8]")).run.ns[-1] == 8


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        load_config(tmp_path / "missing.toml")
    assert "cannot read config file" in excinfo.value.message


def test_overrides(z2_config_file, tmp_path):
    config = load_config(z2_config_file)
    updated = apply_overrides(
        config,
        n_max=8,
        alpha=0.3,
        c_schedule=[0.8, 0.4],
        seed=5,
        out=tmp_path / "elsewhere",
        formats=["csv"],
    )
    assert updated.run.ns == list(range(1, 9))
    assert updated.run.alpha == 0.3
    assert updated.run.c_schedule == [0.8, 0.4]
    assert updated.sample.seed == 5
    assert updated.output.directory == tmp_path / "elsewhere"
    assert updated.output.formats == ["csv"]
    assert updated.map == config.map
    assert apply_overrides(config) == config


@pytest.mark.parametrize(
    ("overrides", "fragment"),
    [
        ({"alpha": 0.0}, messages.ALPHA_NOT_POSITIVE),
        ({"c_schedule": [0.2, 0.9]}, messages.C_SCHEDULE_NOT_DESCENDING),
        ({"n_max": 40}, messages.N_RANGE_OVER_BUDGET),
        ({"formats": ["xml"]}, messages.FORMATS_INVALID),
    ],
)
def test_invalid_overrides(z2_config_file, overrides, fragment):
    config = load_config(z2_config_file)
    with pytest.raises(ConfigError) as excinfo:
        apply_overrides(config, **overrides)
    assert fragment in excinfo.value.message
    assert excinfo.value.line is None


def test_settings_supply_run_and_sample_defaults(monkeypatch):
    monkeypatch.setenv("DEFAULT_ALPHA", "0.3")
    monkeypatch.setenv("PRESSURE_WINDOW", "2")
    monkeypatch.setenv("SAMPLE_COUNT", "1234")
    monkeypatch.setenv("SAMPLE_SEED", "7")
    get_settings.cache_clear()
    config = parse_config("[map]\nnumerator = [-1, 0, 1]\n")
    assert config.run.alpha == 0.3
    assert config.run.window == 2
    assert config.sample.count == 1234
    assert config.sample.seed == 7


def test_settings_supply_map_defaults(monkeypatch, tmp_path):
    monkeypatch.setenv("POLE_TOLERANCE", "1e-9")
    monkeypatch.setenv("SPHERE_HANDLING", "true")
    monkeypatch.setenv("JULIA_PRESSURE_OUTPUT_DIR", str(tmp_path / "results"))
    get_settings.cache_clear()
    config = parse_config("[map]\nnumerator = [1]\ndenominator = [0, 0, 1]\n\n[run]\nn_range = [1, 4]\n")
    assert config.map.pole_tolerance == 1e-9
    assert config.map.sphere is True
    assert config.output.directory == tmp_path / "results"
    explicit = parse_config("[map]\nnumerator = [1]\ndenominator = [0, 0, 1]\nsphere = false\n\n[run]\nn_range = [1, 4]\n")
    assert explicit.map.sphere is False


def test_separated_pool_is_configurable():
    config = parse_config('[map]\nnumerator = [-1, 0, 1]\n\n[run]\nseparated_pool = "sample"\n')
    assert config.run.separated_pool == SeparatedPool.sample
    assert parse_config("[map]\nnumerator = [-1, 0, 1]\n").run.separated_pool == SeparatedPool.pullback
