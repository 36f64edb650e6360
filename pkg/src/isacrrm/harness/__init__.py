"""Scenario files, experiment drivers and the command line."""

from .config import ConfigError, ScenarioConfig, bundled_scenario, draw_scenario, load_scenario
from .runner import ResultRecord, UnverifiedResult, emit_results, load_results, run_scenario, sweep_grid

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "bundled_scenario",
    "draw_scenario",
    "load_scenario",
    "ResultRecord",
    "UnverifiedResult",
    "emit_results",
    "load_results",
    "run_scenario",
    "sweep_grid",
]
