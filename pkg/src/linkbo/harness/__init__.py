"""Experiment harness: configs, runners, CSV/plot outputs and the CLI."""

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import (run_clock_skew_grid, run_latency_experiment,
                          run_length_sweep, run_max_bitrate_search,
                          run_param_sweep)
from .outputs import emit_outputs

__all__ = [
    "ConfigError", "ExperimentConfig", "load_config", "run_latency_experiment",
    "run_length_sweep", "run_param_sweep", "run_max_bitrate_search",
    "run_clock_skew_grid", "emit_outputs",
]
