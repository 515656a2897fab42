"""Batch front end: configuration, command dispatch and report emission."""

from chemotaxis_lab.cli.commands import COMMANDS, CommandResult, Flags, run_command
from chemotaxis_lab.cli.config import ExperimentConfig, dump_defaults, load_config, loads_config
from chemotaxis_lab.cli.emit import TableReport, emit_report

__all__ = ["COMMANDS", "CommandResult", "ExperimentConfig", "Flags", "TableReport",
           "dump_defaults", "emit_report", "load_config", "loads_config", "run_command"]
