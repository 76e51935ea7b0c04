"""Experiment configuration, sweeps and figure emission."""

from .config import ExperimentConfig, load_config, parse_config, resolve_lambda_grid, resolve_t
from .figures import emit_figure1, emit_figure2, figure1_table, figure2_tables
from .sweep import plan_sweep, read_csv, run_sweep, write_csv

__all__ = ["ExperimentConfig", "load_config", "parse_config", "resolve_lambda_grid", "resolve_t",
           "emit_figure1", "emit_figure2", "figure1_table", "figure2_tables", "plan_sweep",
           "read_csv", "run_sweep", "write_csv"]
