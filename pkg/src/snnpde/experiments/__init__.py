"""Config-driven sweeps that regenerate the figure data as CSV/JSON."""

from .config import EXPERIMENTS, ExperimentConfig, load_config, validate
from .runner import RunRecord, emit_plot_data, run_experiment

__all__ = ["EXPERIMENTS", "ExperimentConfig", "RunRecord", "emit_plot_data",
           "load_config", "run_experiment", "validate"]
