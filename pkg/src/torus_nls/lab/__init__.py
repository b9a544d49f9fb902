"""Experiment orchestration: config ingestion, the initial-data catalog,
scenario runners, report emission, figures, and the command-line interface."""

from .config import ConfigError, ExperimentConfig, load_config
from .report import ExperimentReport

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "ExperimentReport"]
