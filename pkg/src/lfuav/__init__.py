"""Outage analysis and learned placement for a lossy-forward UAV relay."""
from .config import ConfigError, ExperimentConfig
from .env import EnvConfig, RelayEnv, SystemOutageFn
from .geometry import AirGroundParams, LinkBudget, NodeLayout, Position3D, RadioConfig, link_budget
from .outage import outage_case_decomposition, outage_closed_form, outage_monte_carlo, system_outage
from .ratedist import DistortionSpec

__version__ = "0.1.0"

__all__ = [
    "AirGroundParams", "ConfigError", "DistortionSpec", "EnvConfig", "ExperimentConfig", "LinkBudget",
    "NodeLayout", "Position3D", "RadioConfig", "RelayEnv", "SystemOutageFn", "link_budget",
    "outage_case_decomposition", "outage_closed_form", "outage_monte_carlo", "system_outage",
]
