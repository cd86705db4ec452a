"""Experiment runner, metrics, built-in verification suites, and the CLI
surface. Everything here is reproducible byte-for-byte from (config, seed)."""

from .config import ExperimentConfig, ServiceConfig, load_config, save_config
from .experiment import (
    ImitationEvalReport,
    eval_imitation,
    eval_rl,
    recompute_metrics,
    run_experiment,
)
from .verify import run_suites, SUITES

__all__ = [
    "ExperimentConfig",
    "ServiceConfig",
    "load_config",
    "save_config",
    "ImitationEvalReport",
    "eval_imitation",
    "eval_rl",
    "recompute_metrics",
    "run_experiment",
    "run_suites",
    "SUITES",
]
