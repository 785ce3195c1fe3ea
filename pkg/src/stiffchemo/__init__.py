"""Kinetic run-and-tumble chemotaxis with stiff logarithmic sensing.

Linear stability of the kinetic model and its flux-limited Keller-Segel
limit, a particle Monte Carlo engine, a continuum solver and spectral
diagnostics.  The command-line entry point is :mod:`stiffchemo.cli`.
"""
__version__ = "0.1.0"

from ._backend import HAVE_COMPILED
from .continuum import ContinuumParams, continuum_growth_rate, continuum_threshold, scaled_params
from .field import CyclicScreenedPoisson, FieldGrid, solve_chemoattractant
from .kinetic import (
    critical_stiffness,
    growth_rate,
    is_unstable_mode,
    most_unstable_mode,
    stability_diagram,
    unstable_band,
)
from .ks import KsConfig, KsParams, flux_U, ks_run, ks_step
from .mc import McConfig, McSimulation, run
from .model import TABLE1, ModelParams, ResponseFunction, params_from_table1, stiffness_ratio
from .spectral import detect_first_peak, pattern_metrics, power_spectrum, time_averaged_spectrum

__all__ = [
    "HAVE_COMPILED",
    "TABLE1",
    "ContinuumParams",
    "CyclicScreenedPoisson",
    "FieldGrid",
    "KsConfig",
    "KsParams",
    "McConfig",
    "McSimulation",
    "ModelParams",
    "ResponseFunction",
    "continuum_growth_rate",
    "continuum_threshold",
    "critical_stiffness",
    "detect_first_peak",
    "flux_U",
    "growth_rate",
    "is_unstable_mode",
    "ks_run",
    "ks_step",
    "most_unstable_mode",
    "params_from_table1",
    "pattern_metrics",
    "power_spectrum",
    "run",
    "scaled_params",
    "solve_chemoattractant",
    "stability_diagram",
    "stiffness_ratio",
    "time_averaged_spectrum",
    "unstable_band",
]
