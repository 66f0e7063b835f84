"""Bayesian pursuit under a Bernoulli-Gaussian sparse model, with greedy baselines."""

from .bg_model import GroundTruth, ModelParams, generate_trial, log_joint, trial_rng
from .core_linalg import Dictionary, DimensionError, RankDeficientError
from .state import AlgoReport, PursuitState, StopRule

__all__ = [
    "AlgoReport",
    "Dictionary",
    "DimensionError",
    "GroundTruth",
    "ModelParams",
    "PursuitState",
    "RankDeficientError",
    "StopRule",
    "generate_trial",
    "log_joint",
    "trial_rng",
]
__version__ = "0.1.0"
