"""Experiment orchestration: configs, training with periodic evaluation, metrics, reproduction, CLI."""
from lodac.harness.config import ExperimentConfig, default_budget
from lodac.harness.metrics import EvalRecord, OptimalStats, hitting_ratio, ruggedness
from lodac.harness.training import ExperimentLog, Trainer, train

__all__ = [
    "EvalRecord",
    "ExperimentConfig",
    "ExperimentLog",
    "OptimalStats",
    "Trainer",
    "default_budget",
    "hitting_ratio",
    "ruggedness",
    "train",
]
