"""Pseudo-spectral simulator for 2-D isentropic compressible Navier-Stokes flow
with density-dependent bulk viscosity on the periodic unit torus.

Modules:

grid        FFT substrate, spectral derivatives, means and L^p norms
elliptic    periodic Poisson and variable-coefficient Lame solvers
model       parameters, state, constitutive laws, derived fields, right-hand side
dynamics    RK4 stepping and run orchestration
initdata    delta-regularized initial data, compatibility solve, presets
lagrangian  particle paths and the log-density identity
analysis    diagnostics functionals and functional-inequality checks
config      JSON run configuration
fileio      snapshots, diagnostics CSV and PGM heatmaps
cli         command-line entry point
"""
from .dynamics import RunConfig, RunRecord, run, stable_dt, step
from .errors import (
    BadFormat,
    BlowUp,
    ConfigError,
    ExponentOutOfRange,
    HistoryGap,
    MeanIncompatible,
    NoConvergence,
    NonPositiveDensity,
    NonZeroMean,
    UnknownPreset,
    VacuumOnPath,
    VKTError,
)
from .model import Params, State, VacuumPolicy

__version__ = "0.1.0"

__all__ = [
    "BadFormat",
    "BlowUp",
    "ConfigError",
    "ExponentOutOfRange",
    "HistoryGap",
    "MeanIncompatible",
    "NoConvergence",
    "NonPositiveDensity",
    "NonZeroMean",
    "Params",
    "RunConfig",
    "RunRecord",
    "State",
    "UnknownPreset",
    "VKTError",
    "VacuumOnPath",
    "VacuumPolicy",
    "run",
    "stable_dt",
    "step",
]
