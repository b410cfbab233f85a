from .config import METHODS, ExperimentConfig, parse_kv
from .runner import Cell, ResultTable, parse_grid, run, run_cell, sweep_fs, sweep_series
from .tables import emit_sweep, emit_table, read_results, table_csv

__all__ = ["METHODS", "ExperimentConfig", "parse_kv", "Cell", "ResultTable", "parse_grid", "run",
           "run_cell", "sweep_fs", "sweep_series", "emit_sweep", "emit_table", "read_results", "table_csv"]
