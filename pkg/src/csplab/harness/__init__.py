"""Experiment harness: configs, runners, HTTP service, and the CLI client."""

from .models import ExperimentConfig, InstanceRequest, ResultRecord, ToleranceCheck, WeightSpec
from .experiments import run_experiment

__all__ = [
    "ExperimentConfig",
    "InstanceRequest",
    "ResultRecord",
    "ToleranceCheck",
    "WeightSpec",
    "run_experiment",
]
