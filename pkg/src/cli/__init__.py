"""
Command-line layer: run configuration and command dispatch.
"""
from .config import Command, RunConfig, RunSettings, dump_config, parse_config
from .runner import emit_csv, run

__all__ = ["Command", "RunConfig", "RunSettings", "dump_config", "emit_csv", "parse_config", "run"]
