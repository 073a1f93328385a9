"""Point-time-locked atomic swaps between a BTC-like and an ETH-like chain."""

from .group import SECP256K1, TOY, get_group
from .protocol import ScenarioScript, ScenarioOverrides, run_scenario, simulate

__all__ = ["SECP256K1", "TOY", "get_group", "ScenarioScript", "ScenarioOverrides",
           "run_scenario", "simulate"]
__version__ = "0.1.0"
