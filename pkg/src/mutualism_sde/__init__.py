"""Simulation and verification toolkit for a stochastic two-species mutualism model."""

__version__ = "0.1.0"

from .model import (
    ModelParams,
    Regime,
    State,
    classify,
    diffusion,
    drift,
    equilibria,
    figure1_params,
    moment_bound,
    norm_moment_bound,
    persistence_limits,
)
from .noise import BrownianPath, coarsen, generate
from .integrate import Scheme, Trajectory, exact_gbm, simulate, step_euler, step_log_euler, step_milstein
from .envelopes import EnvelopeSet, build_envelopes, check_sandwich, stochastic_logistic_exact
from .analysis import (
    EnsembleSummary,
    PathStats,
    holder_diagnostic,
    moment_check,
    path_stats,
    permanence_check,
    regime_concordance,
    run_ensemble,
    strong_convergence,
)
from .config import RunConfig, parse_config
