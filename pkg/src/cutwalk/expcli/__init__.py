"""Config-driven experiment runner and the ``cutwalk`` command line."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config_text
from .experiments import RefusalError, run
from .report import EmitError, SummaryReport, emit

__all__ = [
    "ConfigError",
    "EmitError",
    "ExperimentConfig",
    "RefusalError",
    "SummaryReport",
    "emit",
    "load_config",
    "parse_config_text",
    "run",
]
