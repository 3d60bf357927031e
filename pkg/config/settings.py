# config/settings.py
"""
Settings: config/hetconv_config.json defaults, overridden by environment variables.

Environment (a .env file in the working directory is loaded with python-dotenv):
    HETCONV_CONFIG   path to an alternative JSON config
    HETCONV_SEED     default seed for every randomized command
"""

import copy
import json
import logging
import os
from typing import Any, Dict, Optional

from dotenv import find_dotenv, load_dotenv

from utils.validation import Sanitizer, ValidationError

logger = logging.getLogger("Settings")

DEFAULT_CONFIG_FILE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "hetconv_config.json")

_settings: Optional["Settings"] = None


class Settings:
    """
    Sectioned settings with dotted lookup

    Usage:
        settings = get_settings()
        lr = settings.get("training.lr", 0.05)
        seed = settings.seed
    """

    def __init__(self, data: Dict[str, Any], source: Optional[str] = None):
        self.data = data
        self.source = source

    def get(self, dotted_key: str, default: Any = None) -> Any:
        node: Any = self.data
        for part in dotted_key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def section(self, name: str) -> Dict[str, Any]:
        return {k: v for k, v in self.data.get(name, {}).items() if not k.startswith("_")}

    @property
    def seed(self) -> int:
        return Sanitizer.sanitize_seed(self.get("general.seed", 0))


def _read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ValidationError(f"invalid config file {path}: {e}") from e


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_settings(config_file: Optional[str] = None) -> Settings:
    """
    Load defaults, then `config_file` (or $HETCONV_CONFIG) on top, then $HETCONV_SEED.

    Raises:
        ValidationError: If a config file is missing or malformed, or the seed is invalid
    """
    load_dotenv(find_dotenv(usecwd=True))
    data = _read_json(DEFAULT_CONFIG_FILE)
    source = DEFAULT_CONFIG_FILE

    override_file = config_file or os.getenv("HETCONV_CONFIG")
    if override_file:
        data = _merge(data, _read_json(override_file))
        source = override_file

    env_seed = os.getenv("HETCONV_SEED")
    if env_seed is not None and env_seed.strip():
        data.setdefault("general", {})["seed"] = Sanitizer.sanitize_seed(env_seed)

    logger.debug(f"Settings loaded from {source}")
    return Settings(data, source)


def get_settings() -> Settings:
    """Process-wide settings, loaded on first use"""
    global _settings
    if _settings is None:
        _settings = load_settings()
    return _settings


def reset_settings() -> None:
    global _settings
    _settings = None
