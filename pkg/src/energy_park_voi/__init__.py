"""Bayesian design of a wind, solar and storage energy park: stochastic LP
sizing, value of information and value of technology optionality."""

from .optimizer import CvarConfig, DesignVariables, SystemParams, solve_design
from .pipeline import (
    AnalysisConfig,
    ParkInputs,
    compute_evii,
    compute_evo,
    preposterior_value,
    prior_design,
    risk_averse_run,
    run_analysis,
    sensitivity_sweep,
)
from .uncertainty import DEFAULT_CATALOGUE, StorageTechnology, TruncatedGaussianSpec

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig",
    "CvarConfig",
    "DEFAULT_CATALOGUE",
    "DesignVariables",
    "ParkInputs",
    "StorageTechnology",
    "SystemParams",
    "TruncatedGaussianSpec",
    "compute_evii",
    "compute_evo",
    "preposterior_value",
    "prior_design",
    "risk_averse_run",
    "run_analysis",
    "sensitivity_sweep",
    "solve_design",
]
