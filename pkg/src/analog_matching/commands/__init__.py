"""Commands - all CLI command implementations."""

import json
import logging
from pathlib import Path

from analog_matching.config import ExperimentConfig, load_config


def setup(config_path: str, log_level: str | None = None) -> ExperimentConfig:
    """Load the configuration and configure logging from it.

    Args:
        config_path: Path to the configuration file
        log_level: Logging level; overrides the config file when given

    Returns:
        Loaded configuration
    """
    config = load_config(config_path)
    effective_log_level = log_level if log_level is not None else config.logging_level
    logging.basicConfig(
        level=getattr(logging, effective_log_level.upper()),
        format=config.logging_format,
    )
    return config


def write_json(data: dict, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2)
    return path


def banner(title: str) -> None:
    print("=" * 70)
    print(title)
    print("=" * 70)
