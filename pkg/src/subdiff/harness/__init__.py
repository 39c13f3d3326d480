"""Experiment harness: configuration, metrics, runners and the command line."""

from .config import (
    COEFFICIENT_PRESETS,
    KINDS,
    SCHEMA_VERSION,
    ExperimentConfig,
    canonical,
    load_config,
    parse_config,
    serialize,
)
from .experiments import Check, ComparisonReport, relaxation_reference, run_experiment, write_csv
from .metrics import density_distances, kernel_density, ks_distance, mean_and_se

__all__ = [
    "COEFFICIENT_PRESETS",
    "KINDS",
    "SCHEMA_VERSION",
    "ExperimentConfig",
    "canonical",
    "load_config",
    "parse_config",
    "serialize",
    "Check",
    "ComparisonReport",
    "relaxation_reference",
    "run_experiment",
    "write_csv",
    "density_distances",
    "kernel_density",
    "ks_distance",
    "mean_and_se",
]
