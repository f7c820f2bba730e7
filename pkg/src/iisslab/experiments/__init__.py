"""Scenario runners, configuration, reporting and the command-line interface."""

from .config import RunConfig, default_config, load_config, scenario_rng
from .reporting import BoundReport, ScenarioResult, hash_csv_outputs, write_summary
from .scenarios import SCENARIOS, ScenarioIO, run_scenarios, simulate_scenario

__all__ = [
    "RunConfig",
    "default_config",
    "load_config",
    "scenario_rng",
    "BoundReport",
    "ScenarioResult",
    "hash_csv_outputs",
    "write_summary",
    "SCENARIOS",
    "ScenarioIO",
    "run_scenarios",
    "simulate_scenario",
]
