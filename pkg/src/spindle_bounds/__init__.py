"""Root package info."""
import os

from spindle_bounds.__about__ import *  # noqa: F401, F403
from spindle_bounds.bounds import BoundKind, bound_curve, svd_tail_bound
from spindle_bounds.hadamard import hadamard_of_dim, sylvester
from spindle_bounds.harness import ExperimentSpec, figure2_reproduction, run_experiment, verify
from spindle_bounds.learners import InitKind, LearnerConfig, LearnerKind, train
from spindle_bounds.problems import Family, make_problem
from spindle_bounds.strategy import HorovodStrategy, LocalStrategy, get_strategy

_PACKAGE_ROOT = os.path.dirname(__file__)
_PROJECT_ROOT = os.path.dirname(_PACKAGE_ROOT)

__all__ = [
    "BoundKind",
    "ExperimentSpec",
    "Family",
    "HorovodStrategy",
    "InitKind",
    "LearnerConfig",
    "LearnerKind",
    "LocalStrategy",
    "bound_curve",
    "figure2_reproduction",
    "get_strategy",
    "hadamard_of_dim",
    "make_problem",
    "run_experiment",
    "svd_tail_bound",
    "sylvester",
    "train",
    "verify",
]
