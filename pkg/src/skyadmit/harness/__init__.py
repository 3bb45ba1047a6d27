from .config import ConfigError, ExperimentConfig, config_from_dict, parse_config
from .experiments import (ResultRow, run_capacity_sweep, run_convergence,
                          run_energy_rate_sweep, run_experiment, run_single_eval)

__all__ = ["ConfigError", "ExperimentConfig", "ResultRow", "config_from_dict", "parse_config",
           "run_capacity_sweep", "run_convergence", "run_energy_rate_sweep",
           "run_experiment", "run_single_eval"]
