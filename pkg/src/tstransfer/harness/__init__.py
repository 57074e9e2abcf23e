"""Experiment orchestration: config, result store, scheduling, reporting, CLI."""
from .config import ExperimentConfig, load_config, parse_config
from .report import ComparisonCell, cmd_report, collect_cells
from .run import Runner, cmd_baseline, cmd_finetune, cmd_pretrain, cmd_run, schedule
from .store import ResultStore, Unit

__all__ = [
    "ComparisonCell", "ExperimentConfig", "ResultStore", "Runner", "Unit", "cmd_baseline",
    "cmd_finetune", "cmd_pretrain", "cmd_report", "cmd_run", "collect_cells", "load_config",
    "parse_config", "schedule",
]
