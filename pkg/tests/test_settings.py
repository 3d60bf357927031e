"""
Tests for config.settings: defaults, override files and environment variables.
Run: pytest tests/test_settings.py
"""

import json
import os

import pytest

from config import settings as settings_module
from config.settings import get_settings, load_settings, reset_settings
from utils.validation import ValidationError


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    monkeypatch.delenv("HETCONV_SEED", raising=False)
    monkeypatch.delenv("HETCONV_CONFIG", raising=False)
    # keep a developer's .env out of the picture
    monkeypatch.chdir(tmp_path)
    reset_settings()
    yield
    reset_settings()


def test_defaults():
    s = load_settings()
    assert s.seed == 0
    assert s.get("analysis.speedup_parts") == [1, 2, 4, 8, 16, 32, 64]
    assert s.get("missing.key", "fallback") == "fallback"
    assert s.source == settings_module.DEFAULT_CONFIG_FILE


def test_section_hides_comments():
    assert not any(k.startswith("_") for k in load_settings().section("verify"))


def test_override_file_merges(tmp_path):
    path = tmp_path / "override.json"
    path.write_text(json.dumps({"training": {"epochs": 2}, "general": {"seed": 7}}))
    s = load_settings(str(path))
    assert s.get("training.epochs") == 2
    assert s.get("training.lr") == 0.05
    assert s.seed == 7
    assert s.source == str(path)


def test_config_from_environment(monkeypatch, tmp_path):
    path = tmp_path / "env.json"
    path.write_text(json.dumps({"bench": {"repetitions": 9}}))
    monkeypatch.setenv("HETCONV_CONFIG", str(path))
    assert load_settings().get("bench.repetitions") == 9


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("HETCONV_SEED", "42")
    assert load_settings().seed == 42


def test_seed_from_dotenv(tmp_path):
    (tmp_path / ".env").write_text("HETCONV_SEED=13\n")
    try:
        assert load_settings().seed == 13
    finally:
        # load_dotenv writes straight into os.environ
        os.environ.pop("HETCONV_SEED", None)


@pytest.mark.parametrize("value", ["-1", "abc", str(2 ** 64)])
def test_bad_seed(monkeypatch, value):
    monkeypatch.setenv("HETCONV_SEED", value)
    with pytest.raises(ValidationError):
        load_settings()


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ValidationError, match="not found"):
        load_settings(str(tmp_path / "nope.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ValidationError, match="invalid config file"):
        load_settings(str(bad))


def test_get_settings_is_cached():
    first = get_settings()
    assert get_settings() is first
    reset_settings()
    assert get_settings() is not first
