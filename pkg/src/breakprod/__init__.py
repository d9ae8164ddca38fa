"""Optimal production planning for an item whose stock breaks at a stock-dependent rate."""
from .analytic import (
    coefficients_1a,
    coefficients_1b,
    profit_1a,
    profit_1b,
    u_1a,
    u_1b,
    x_1a,
    x_1b,
)
from .bvp import BvpSolution, GridSpec, NewtonSettings, el_residual, grid_convergence, solve_bvp
from .model import (
    BreakabilityLaw,
    DemandPoly,
    EconomicParams,
    HoldingCostLaw,
    ModelInstance,
    Trajectory,
    profit_of_trajectory,
    table1_instance,
)
from .transcription import OptimizationReport, TranscriptionSettings, optimize

__version__ = "0.1.0"

__all__ = [
    "BreakabilityLaw", "BvpSolution", "DemandPoly", "EconomicParams", "GridSpec",
    "HoldingCostLaw", "ModelInstance", "NewtonSettings", "OptimizationReport",
    "Trajectory", "TranscriptionSettings", "coefficients_1a", "coefficients_1b",
    "el_residual", "grid_convergence", "optimize", "profit_1a", "profit_1b",
    "profit_of_trajectory", "solve_bvp", "table1_instance", "u_1a", "u_1b", "x_1a", "x_1b",
]
