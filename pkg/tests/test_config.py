"""Settings loading, overrides and the active-settings context."""

import logging

import pytest
from pydantic import ValidationError

from lsi_forge.cli import main
from lsi_forge.config import Settings, Tolerances, current_settings, get_settings, use_settings


def test_defaults_match_documented_values():
    """Defaults match the documented values."""
    s = Settings()
    assert s.threads == 1
    assert s.seed == 0
    assert s.tolerances.kkt_residual == 1e-9
    assert s.tolerances.bisection_width == 1e-3
    assert s.tolerances.contractive == 1e-7


def test_environment_prefix(monkeypatch):
    """LSI_FORGE_ variables and nested tolerances load from the environment."""
    monkeypatch.setenv("LSI_FORGE_THREADS", "4")
    monkeypatch.setenv("LSI_FORGE_TOLERANCES__SLACK", "1e-6")
    s = Settings()
    assert s.threads == 4
    assert s.tolerances.slack == 1e-6


def test_invalid_log_level_rejected():
    """Unknown log levels are rejected."""
    with pytest.raises(ValidationError):
        Settings(log_level="chatty")


def test_log_level_normalized():
    """Log levels are upper-cased."""
    assert Settings(log_level="debug").log_level == "DEBUG"


def test_tol_override_sets_slack_and_residual():
    """--tol sets both slack and KKT residual; None leaves fields alone."""
    s = get_settings().with_overrides(tol=1e-6, threads=None)
    assert s.tolerances.slack == 1e-6
    assert s.tolerances.kkt_residual == 1e-6
    assert s.threads == get_settings().threads


def test_overrides_are_validated():
    """Overrides go through validation."""
    with pytest.raises(ValidationError):
        get_settings().with_overrides(threads=0)


def test_tolerances_are_frozen():
    """Tolerance records are immutable."""
    with pytest.raises(ValidationError):
        Tolerances().slack = 1.0


def test_use_settings_restores_previous():
    """The active settings are restored after the context."""
    base = current_settings()
    custom = base.with_overrides(seed=99)
    with use_settings(custom):
        assert current_settings().seed == 99
    assert current_settings() is base


def test_provenance_excludes_presentation_fields():
    """Provenance keeps numeric settings and drops the log level."""
    prov = get_settings().provenance()
    assert "log_level" not in prov
    assert "tolerances" in prov


@pytest.fixture
def restore_logging():
    package_logger = logging.getLogger("lsi_forge")
    level = package_logger.level
    yield package_logger
    package_logger.setLevel(level)
    get_settings.cache_clear()


def test_cli_applies_log_level_from_settings(monkeypatch, restore_logging, capsys):
    """The package logger follows Settings.log_level once the CLI has loaded the environment."""
    monkeypatch.setenv("LSI_FORGE_LOG_LEVEL", "warning")
    assert main(["entropy-split", "--n", "4", "--samples", "200"]) == 0
    capsys.readouterr()
    assert get_settings().log_level == "WARNING"
    assert restore_logging.level == logging.WARNING


def test_log_level_flag_beats_settings(monkeypatch, restore_logging, capsys):
    """--log-level overrides the level coming from the environment."""
    monkeypatch.setenv("LSI_FORGE_LOG_LEVEL", "WARNING")
    assert main(["entropy-split", "--n", "4", "--samples", "200", "--log-level", "ERROR"]) == 0
    capsys.readouterr()
    assert restore_logging.level == logging.ERROR


def test_settings_have_no_output_directory():
    """Report paths come from --out only."""
    assert "report_dir" not in Settings.model_fields
