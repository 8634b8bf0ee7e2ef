"""Deterministic MANET routing simulator: single-path AODV-style routing and
a source-managed multipath variant, side by side."""

from .energy import EnergyParams
from .engine import Engine, EventKind, RngStream, SimulationError
from .metrics import MetricsReport
from .mobility import MobilityModel, MobilityParams
from .proto_common import ProtocolParams, fresher
from .radio import RadioParams
from .runner import RunResult, run_scenario
from .scenario import Scenario, ScenarioError, parse_scenario, scenario_text
from .sweep import sweep, summarize
from .traffic import FlowSpec

__version__ = "0.1.0"

__all__ = [
    "EnergyParams",
    "Engine",
    "EventKind",
    "FlowSpec",
    "MetricsReport",
    "MobilityModel",
    "MobilityParams",
    "ProtocolParams",
    "RadioParams",
    "RngStream",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "SimulationError",
    "fresher",
    "parse_scenario",
    "run_scenario",
    "scenario_text",
    "summarize",
    "sweep",
    "__version__",
]
