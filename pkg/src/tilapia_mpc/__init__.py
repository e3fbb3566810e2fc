"""Model predictive control of Nile tilapia growth."""

from .bounds import ControlBounds, ControlPlan
from .costs import (CostSettings, EconomicCostParams, FcrCostParams, TerminalCostParams,
                    TrackingCostParams)
from .errors import ConfigError, DomainError, IntegrationError, MetricError, SolverError
from .growth import ControlInput, FishState, GrowthParams, SimConfig, simulate, step
from .metrics import CostLedger, FarmConfig, PerformanceReport
from .mpc import (ClosedLoopResult, Controller, HorizonConfig, NoiseConfig, OcpResult,
                  run_closed_loop, solve_ocp)
from .reference import ReferenceTrajectory, generate_nominal_reference, load_reference

__version__ = "0.1.0"

__all__ = [
    "ControlBounds", "ControlPlan",
    "CostSettings", "EconomicCostParams", "FcrCostParams", "TerminalCostParams",
    "TrackingCostParams",
    "ConfigError", "DomainError", "IntegrationError", "MetricError", "SolverError",
    "ControlInput", "FishState", "GrowthParams", "SimConfig", "simulate", "step",
    "CostLedger", "FarmConfig", "PerformanceReport",
    "ClosedLoopResult", "Controller", "HorizonConfig", "NoiseConfig", "OcpResult",
    "run_closed_loop", "solve_ocp",
    "ReferenceTrajectory", "generate_nominal_reference", "load_reference",
]
