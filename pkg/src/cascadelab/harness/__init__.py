"""Experiment configs, Monte Carlo orchestration, figure data and the CLI."""
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .runner import ReplicaSummary, RunResult, run

__all__ = ["ConfigError", "ExperimentConfig", "ReplicaSummary", "RunResult", "load_config", "parse_config", "run"]
