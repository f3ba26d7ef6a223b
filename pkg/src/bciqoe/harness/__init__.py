"""Experiment harness: config, runs, sweeps, metrics, and the grid oracle."""

from .calibrate import calibrate_from_config, calibrate_z
from .config import ConfigError, ExperimentConfig
from .metrics import MetricsTable, cdf, cdf_table
from .oracle import OracleResult, oracle_best
from .runner import RunResult, SweepSpec, build_dataset, build_env, build_learner, run, sweep

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "MetricsTable",
    "cdf",
    "cdf_table",
    "OracleResult",
    "oracle_best",
    "calibrate_z",
    "calibrate_from_config",
    "RunResult",
    "SweepSpec",
    "build_dataset",
    "build_env",
    "build_learner",
    "run",
    "sweep",
]
