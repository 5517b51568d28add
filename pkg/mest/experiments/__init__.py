"""Simulation study orchestration: scenarios, normality diagnostic, reports."""

from .normality import NormalityResult, normality_check, sn_squared
from .reporter import CSV_COLUMNS, emit_report, normality_report, parse_report, write_samples
from .runner import (
    DEFAULT_METHODS,
    MethodKind,
    MethodSpec,
    ScenarioReport,
    ScenarioRunner,
    TableRow,
    estimate,
    run_scenario,
)

__all__ = [
    "NormalityResult",
    "normality_check",
    "sn_squared",
    "CSV_COLUMNS",
    "emit_report",
    "normality_report",
    "parse_report",
    "write_samples",
    "DEFAULT_METHODS",
    "MethodKind",
    "MethodSpec",
    "ScenarioReport",
    "ScenarioRunner",
    "TableRow",
    "estimate",
    "run_scenario",
]
