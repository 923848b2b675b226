"""Numerical verification suite for the spectral calculus estimates."""

from .common import ExperimentSpec
from .runner import DEFAULT_IDS, REGISTRY, resolve_ids, run_suite, suite_exit_code

__all__ = [
    "ExperimentSpec",
    "REGISTRY",
    "DEFAULT_IDS",
    "resolve_ids",
    "run_suite",
    "suite_exit_code",
]
