"""Batch evaluation: config parsing, experiment runner, reports, figures."""

from .config import ExperimentConfig, RunSpec, expand_runs, load_experiment_config
from .report import ErrorReport, build_error_report, circular_abs_error
from .runner import RunRecord, run_experiment

__all__ = [
    "ExperimentConfig",
    "RunSpec",
    "expand_runs",
    "load_experiment_config",
    "ErrorReport",
    "build_error_report",
    "circular_abs_error",
    "RunRecord",
    "run_experiment",
]
