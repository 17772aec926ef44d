"""Configuration, experiments and command-line entry points."""

from .config import ConfigError, RunConfig, load_config, parse_config
from .experiments import EXPERIMENTS, TOLERANCES, ExperimentReport

__all__ = ["ConfigError", "EXPERIMENTS", "ExperimentReport", "RunConfig", "TOLERANCES", "load_config", "parse_config"]
