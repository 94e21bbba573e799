"""Estimators: empirical and smoothed frequencies, ball-model interpolation,
and Good-Turing level-mass estimates for the partition model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BallSideInfo,
    Distribution,
    EmptyLevelError,
    EstimatorError,
    InputError,
    PartitionSideInfo,
    SampleProfile,
)


@dataclass(frozen=True)
class NaturalLevelEstimate:
    """A single probability mass assigned to every symbol seen exactly
    ``level`` times. ``implied_mass`` is the total mass this places on the
    level, i.e. phi_l * value."""

    level: int
    value: float
    implied_mass: float


@dataclass(frozen=True)
class TwoLevelEstimate:
    """Separate per-symbol masses for the low-side and high-side occupants of
    one level."""

    level: int
    value_low: float
    value_high: float


def empirical(profile: SampleProfile) -> Distribution:
    """Relative frequencies N_i / n."""
    if profile.n < 1:
        raise EstimatorError("empirical estimator undefined for an empty sample")
    return Distribution(profile.counts / profile.n)


def add_constant(profile: SampleProfile, beta: float | None = None) -> Distribution:
    """Add-beta smoothing, (N_i + beta) / (n + d*beta).

    The default beta = sqrt(n)/d is the minimax-motivated choice for squared
    L2 loss.
    """
    if profile.n < 1:
        raise EstimatorError("add-constant estimator undefined for an empty sample")
    if beta is None:
        beta = math.sqrt(profile.n) / profile.d
    if beta < 0:
        raise EstimatorError(f"smoothing constant must be nonnegative, got {beta!r}")
    return Distribution((profile.counts + beta) / (profile.n + profile.d * beta))


def interpolation_alpha(n: int, delta: float, center_norm: float) -> float:
    """Mixing weight that minimizes the worst-case risk proxy

        alpha^2 * (1 - (center_norm - delta)^2) / n  +  (1 - alpha)^2 * delta^2

    over alpha in [0, 1], namely n*delta^2 / (n*delta^2 + 1 - (center_norm - delta)^2).
    """
    if n < 1:
        raise EstimatorError("interpolation weight needs n >= 1")
    num = n * delta * delta
    return num / (num + 1.0 - (center_norm - delta) ** 2)


def interpolation(profile: SampleProfile, info: BallSideInfo,
                  alpha: float | None = None) -> Distribution:
    """Convex combination alpha * empirical + (1 - alpha) * guess.

    With ``alpha`` omitted, the weight from :func:`interpolation_alpha` is
    used, trusting the guess more when the ball is small or the sample short.
    """
    if profile.d != info.center.d:
        raise InputError(f"dimension mismatch: profile {profile.d}, guess {info.center.d}")
    if alpha is None:
        alpha = interpolation_alpha(profile.n, info.radius, info.center.l2_norm())
    elif not 0.0 <= alpha <= 1.0:
        raise EstimatorError(f"alpha must be in [0, 1], got {alpha!r}")
    emp = empirical(profile)
    return Distribution(alpha * emp.probs + (1.0 - alpha) * info.center.probs)


def good_turing_mass(profile: SampleProfile, level: int) -> float:
    """Good-Turing estimate (l+1) * phi_{l+1} / (n - l) of the total mass of
    symbols seen exactly ``level`` times."""
    if not 0 <= level < profile.n:
        raise EstimatorError(
            f"Good-Turing mass needs 0 <= level < n, got level={level}, n={profile.n}"
        )
    return (level + 1) * profile.phi_at(level + 1) / (profile.n - level)


def one_level_estimate(profile: SampleProfile, level: int) -> NaturalLevelEstimate:
    """Good-Turing level mass spread evenly over the level's occupants."""
    phi = profile.phi_at(level)
    if phi < 1:
        raise EmptyLevelError(f"no symbols were seen exactly {level} times")
    mass = good_turing_mass(profile, level)
    return NaturalLevelEstimate(level=level, value=mass / phi, implied_mass=mass)


def _side_level_value(n: int, n_side: int, phi_l: int, phi_l1: int, level: int) -> float:
    # Good-Turing on the side's own subsample estimates the level mass of the
    # side-conditional distribution; scaling by the side's empirical share
    # N_side/n converts it back to unconditional per-symbol mass.
    if phi_l == 0 or n == 0:
        return 0.0
    conditional = (level + 1) / max(1, n_side - level) * (phi_l1 / phi_l)
    return (n_side / n) * conditional


def two_level_estimate(profile: SampleProfile, part: PartitionSideInfo,
                       level: int) -> TwoLevelEstimate:
    """Per-side Good-Turing estimate for one level.

    Each side is treated as its own estimation problem on its N_side samples,
    then rescaled by the side's empirical share of the sample. A side with no
    occupants at this level gets value 0 (it contributes no loss terms).
    """
    if level < 0:
        raise EstimatorError(f"level must be nonnegative, got {level}")
    if profile.d != part.d:
        raise InputError(f"dimension mismatch: profile {profile.d}, partition {part.d}")
    n_low, n_high = part.side_counts(profile)
    phi_low, phi_high = part.split_phi(profile, level)
    phi1_low, phi1_high = part.split_phi(profile, level + 1)
    return TwoLevelEstimate(
        level=level,
        value_low=_side_level_value(profile.n, n_low, phi_low, phi1_low, level),
        value_high=_side_level_value(profile.n, n_high, phi_high, phi1_high, level),
    )


def _level_mean(values: np.ndarray) -> float:
    # Mean via a shifted sum: blocks of identical probabilities average to
    # that exact value, so oracle residuals vanish exactly on constant blocks.
    base = float(values[0])
    return base + float(np.mean(values - base))


def oracle_level(profile: SampleProfile, level: int) -> float:
    """Best single mass for the level's occupants when the truth is known:
    the mean true probability M_l / phi_l."""
    if profile.truth is None:
        raise EstimatorError("oracle level value needs the true distribution")
    syms = profile.symbols_at(level)
    if syms.size == 0:
        raise EmptyLevelError(f"no symbols were seen exactly {level} times")
    return _level_mean(profile.truth.probs[syms])


def oracle_two_level(profile: SampleProfile, part: PartitionSideInfo,
                     level: int) -> tuple[float, float]:
    """Best per-side masses when the truth is known: the per-side means of the
    true probabilities. Both sides of the level must be occupied."""
    if profile.truth is None:
        raise EstimatorError("oracle level values need the true distribution")
    low, high = part.split_level(profile, level)
    if low.size == 0 or high.size == 0:
        raise EmptyLevelError(
            f"both partition sides must be occupied at level {level} "
            f"(sizes {low.size} and {high.size})"
        )
    probs = profile.truth.probs
    return _level_mean(probs[low]), _level_mean(probs[high])


def level_loss(truth: Distribution, profile: SampleProfile, level: int,
               value: float) -> float:
    """Squared error over the level's occupants for a single assigned mass."""
    syms = profile.symbols_at(level)
    diff = truth.probs[syms] - value
    return float(diff @ diff)


def two_level_loss(truth: Distribution, profile: SampleProfile,
                   part: PartitionSideInfo, level: int,
                   value_low: float, value_high: float) -> float:
    """Squared error over the level's occupants with per-side masses."""
    low, high = part.split_level(profile, level)
    diff_low = truth.probs[low] - value_low
    diff_high = truth.probs[high] - value_high
    return float(diff_low @ diff_low) + float(diff_high @ diff_high)
