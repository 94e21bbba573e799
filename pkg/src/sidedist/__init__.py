"""Discrete distribution estimation with side information.

Two side-information models are supported:

* a ball model, where the unknown distribution lies in an L2 ball around a
  known guess, handled by an interpolation (shrinkage) estimator, and
* a partition model, where the alphabet is split into a low- and a
  high-probability set, handled by a two-level Good-Turing estimator.

The package also evaluates the matching minimax upper/lower bound formulas,
runs the lower-bound constructions as executable numeric checks, and ships a
Monte Carlo harness plus a small text-corpus pipeline for experiments.
"""

from .core import (
    BallSideInfo,
    ConstructionError,
    Distribution,
    EmptyLevelError,
    EstimatorError,
    InputError,
    PartitionSideInfo,
    RiskReport,
    SampleProfile,
    SimulationError,
    ball_contains,
    build_profile,
    l2_distance_squared,
    profile_from_counts,
)

__version__ = "0.1.0"

__all__ = [
    "BallSideInfo",
    "ConstructionError",
    "Distribution",
    "EmptyLevelError",
    "EstimatorError",
    "InputError",
    "PartitionSideInfo",
    "RiskReport",
    "SampleProfile",
    "SimulationError",
    "ball_contains",
    "build_profile",
    "l2_distance_squared",
    "profile_from_counts",
    "__version__",
]
