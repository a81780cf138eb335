"""Scenario assembly, the simulation loop, experiments and outputs."""

from .config import ConfigError, ScenarioConfig, preset_braking, preset_circular, preset_ushape
from .engine import Metrics, SimRecord, run

__all__ = [
    "ConfigError", "ScenarioConfig", "preset_braking", "preset_circular", "preset_ushape",
    "Metrics", "SimRecord", "run",
]
