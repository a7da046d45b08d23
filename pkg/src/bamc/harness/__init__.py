"""Experiment harness: configs, instance generation, replication and reports."""

from .config import ExperimentConfig, GeneratorSpec, load_config, load_instance
from .generators import generate_instance
from .report import emit_report
from .runner import ResultSet, RunRecord, run_experiment

__all__ = [
    "ExperimentConfig",
    "GeneratorSpec",
    "ResultSet",
    "RunRecord",
    "emit_report",
    "generate_instance",
    "load_config",
    "load_instance",
    "run_experiment",
]
