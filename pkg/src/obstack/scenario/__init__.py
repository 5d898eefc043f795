"""Reproducible end-to-end scenario driver."""

from obstack.scenario.model import Expectation, Scenario, ScriptEntry, load_scenario
from obstack.scenario.runner import ScenarioReport, StackUnreachable, run_scenario

__all__ = [
    "Expectation",
    "Scenario",
    "ScenarioReport",
    "ScriptEntry",
    "StackUnreachable",
    "load_scenario",
    "run_scenario",
]
