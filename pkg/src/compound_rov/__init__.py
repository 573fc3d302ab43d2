"""Compound real-options valuation by least-squares Monte Carlo."""

__version__ = "0.1.0"

from .cashflow import CostModel, PayoffMatrix, build_payoff_matrices, npv
from .config import ConfigError, ScenarioConfig, load_config
from .lsmc import BasisSpec, DecisionWindows, exercise_frequency, solve_compound, solve_single_option
from .processes import (
    DomainError,
    GbmParams,
    MeanRevParams,
    RiskNeutralParams,
    simulate_gbm,
    simulate_mean_reverting,
    simulate_risk_neutral_gbm,
)
from .scenario import compare_standalone_vs_compound, run_sensitivity, run_valuation

__all__ = [
    "BasisSpec",
    "ConfigError",
    "CostModel",
    "DecisionWindows",
    "DomainError",
    "GbmParams",
    "MeanRevParams",
    "PayoffMatrix",
    "RiskNeutralParams",
    "ScenarioConfig",
    "build_payoff_matrices",
    "compare_standalone_vs_compound",
    "exercise_frequency",
    "load_config",
    "npv",
    "run_sensitivity",
    "run_valuation",
    "simulate_gbm",
    "simulate_mean_reverting",
    "simulate_risk_neutral_gbm",
    "solve_compound",
    "solve_single_option",
]
