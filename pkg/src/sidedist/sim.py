"""Sampling, Monte Carlo risk estimation, an exact small-instance risk
oracle, and the regret decomposition for the partition model.

Reproducibility contract
------------------------
Trial (n, t) of a run with master seed s draws its samples from a fresh
numpy PCG64 generator seeded with ``trial_seed(s, n, t)``, where

    trial_seed(s, n, t) = F(F(F(s) xor n) xor t)

and F is the splitmix64 output function: F(z) computes, in 64-bit unsigned
arithmetic, z += 0x9E3779B97F4A7C15; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31).

Per-trial seeds therefore do not depend on execution order, and aggregation
is a mean over a trial-indexed array, so any degree of parallelism produces
bit-identical reports.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .core import (
    Distribution,
    EstimatorError,
    InputError,
    PartitionSideInfo,
    BallSideInfo,
    RiskGridPoint,
    RiskReport,
    SampleProfile,
    SimulationError,
    ball_contains,
    build_profile,
    l2_distance_squared,
    profile_from_counts,
)
from .estimators import (
    level_loss,
    one_level_estimate,
    two_level_estimate,
    two_level_loss,
    _level_mean,
)

_MASK64 = (1 << 64) - 1

# Failure policy for Monte Carlo loops: failed trials are excluded and
# counted; more than this fraction aborts the run.
MAX_FAILURE_FRACTION = 0.01

# Enumeration limits for the exact risk oracle.
MAX_EXACT_D = 5
MAX_EXACT_N = 8

_BALL_MAX_PROPOSALS = 100_000


def _splitmix64(state: int) -> int:
    z = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, n: int, trial: int) -> int:
    """64-bit seed for trial ``trial`` at sample size ``n``; see the module
    docstring for the bit-exact derivation."""
    s = _splitmix64(master_seed & _MASK64)
    s = _splitmix64(s ^ (n & _MASK64))
    s = _splitmix64(s ^ (trial & _MASK64))
    return s


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample_iid(dist: Distribution, n: int, seed: int) -> np.ndarray:
    """Draw n i.i.d. symbols, reproducibly for a given seed."""
    if n < 0:
        raise InputError(f"sample size must be nonnegative, got {n}")
    if n == 0:
        return np.empty(0, dtype=np.int64)
    rng = rng_from_seed(seed)
    return rng.choice(dist.d, size=n, p=dist.probs).astype(np.int64)


# A sampler maps (n, seed) to a symbol sequence; the default is i.i.d.
# sampling from the target distribution, corpus experiments substitute
# contiguous-window samplers.
Sampler = Callable[[int, int], np.ndarray]


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run parameters.

    ``loss_kind`` is "l2" for full squared-L2 loss of distribution estimators
    or "level" for per-level restricted losses over the ``levels`` list.
    """

    master_seed: int
    trials: int
    n_grid: tuple[int, ...]
    loss_kind: str = "l2"
    levels: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise InputError(f"need at least one trial, got {self.trials}")
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or any(n < 1 for n in grid):
            raise InputError("n grid must be nonempty with positive entries")
        if list(grid) != sorted(set(grid)):
            raise InputError("n grid must be strictly ascending")
        if self.loss_kind not in ("l2", "level"):
            raise InputError(f"unknown loss kind {self.loss_kind!r}")
        levels = tuple(int(l) for l in self.levels)
        if self.loss_kind == "level" and not levels:
            raise InputError("per-level loss needs a nonempty level list")
        if any(l < 0 for l in levels):
            raise InputError("levels must be nonnegative")
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "levels", levels)


def _run_trials(trials: int, workers: int, task: Callable[[int], object]) -> list:
    """Run trial indices 0..trials-1, results placed by index (order-free)."""
    results: list = [None] * trials
    if workers <= 1:
        for t in range(trials):
            results[t] = task(t)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for t, value in zip(range(trials), pool.map(task, range(trials))):
                results[t] = value
    return results


def _aggregate(losses: np.ndarray, n: int, what: str) -> RiskGridPoint:
    valid = losses[~np.isnan(losses)]
    failures = losses.size - valid.size
    if failures > MAX_FAILURE_FRACTION * losses.size:
        raise SimulationError(
            f"{failures}/{losses.size} trials failed for {what} at n={n}"
        )
    loss = float(valid.mean())
    stderr = 0.0 if valid.size < 2 else float(valid.std(ddof=1) / math.sqrt(valid.size))
    return RiskGridPoint(n=n, loss=loss, stderr=stderr, trials=int(valid.size))


def mc_risk(dist: Distribution,
            estimator: Callable[[SampleProfile], Distribution],
            config: SimConfig,
            name: str = "estimator",
            sampler: Sampler | None = None,
            workers: int = 1) -> RiskReport:
    """Monte Carlo estimate of the expected squared-L2 loss over the n grid.

    Trials that raise :class:`EstimatorError` are excluded and counted; more
    than 1 percent of failures aborts. Results are bit-identical for a fixed
    master seed regardless of ``workers``.
    """
    if config.loss_kind != "l2":
        raise InputError("mc_risk computes the full squared-L2 loss; "
                         "use mc_level_risk for per-level losses")
    if sampler is None:
        sampler = lambda n, seed: sample_iid(dist, n, seed)

    grid = []
    for n in config.n_grid:
        def one_trial(t: int, n: int = n) -> float:
            samples = sampler(n, trial_seed(config.master_seed, n, t))
            profile = build_profile(samples, dist.d, truth=dist)
            try:
                estimate = estimator(profile)
            except EstimatorError:
                return math.nan
            return l2_distance_squared(dist, estimate)

        losses = np.array(_run_trials(config.trials, workers, one_trial), dtype=float)
        grid.append(_aggregate(losses, n, name))
    return RiskReport(estimator_name=name, grid=tuple(grid))


# Per-level estimators hand back either one mass for every occupant of the
# level or an array of per-occupant masses aligned with profile.symbols_at(l).
LevelAssigner = Callable[[SampleProfile, int], "float | np.ndarray"]


def one_level_assigner() -> LevelAssigner:
    def assign(profile: SampleProfile, level: int) -> float:
        return one_level_estimate(profile, level).value
    return assign


def two_level_assigner(part: PartitionSideInfo) -> LevelAssigner:
    def assign(profile: SampleProfile, level: int) -> np.ndarray:
        est = two_level_estimate(profile, part, level)
        syms = profile.symbols_at(level)
        return np.where(part.low_mask[syms], est.value_low, est.value_high)
    return assign


def oracle_assigner() -> LevelAssigner:
    def assign(profile: SampleProfile, level: int) -> float:
        syms = profile.symbols_at(level)
        if syms.size == 0:
            raise EstimatorError(f"no symbols at level {level}")
        return _level_mean(profile.truth.probs[syms])
    return assign


def oracle_two_level_assigner(part: PartitionSideInfo) -> LevelAssigner:
    # Empty sides simply contribute no occupants, so no error convention is
    # needed here, unlike estimators.oracle_two_level.
    def assign(profile: SampleProfile, level: int) -> np.ndarray:
        syms = profile.symbols_at(level)
        if syms.size == 0:
            raise EstimatorError(f"no symbols at level {level}")
        probs = profile.truth.probs
        in_low = part.low_mask[syms]
        values = np.empty(syms.size)
        for mask in (in_low, ~in_low):
            if mask.any():
                values[mask] = _level_mean(probs[syms[mask]])
        return values
    return assign


def mc_level_risk(dist: Distribution,
                  assigner: LevelAssigner,
                  config: SimConfig,
                  name: str = "level-estimator",
                  sampler: Sampler | None = None,
                  workers: int = 1) -> Mapping[int, RiskReport]:
    """Monte Carlo per-level restricted loss, one report per config level.

    A trial where a level is unoccupied (or the assigner raises
    :class:`EstimatorError`) is excluded for that level only.
    """
    if config.loss_kind != "level":
        raise InputError("mc_level_risk needs a config with loss_kind='level'")
    if sampler is None:
        sampler = lambda n, seed: sample_iid(dist, n, seed)
    levels = config.levels

    per_level_grid: dict[int, list[RiskGridPoint]] = {l: [] for l in levels}
    for n in config.n_grid:
        def one_trial(t: int, n: int = n) -> tuple[float, ...]:
            samples = sampler(n, trial_seed(config.master_seed, n, t))
            profile = build_profile(samples, dist.d, truth=dist)
            out = []
            for level in levels:
                syms = profile.symbols_at(level)
                if syms.size == 0:
                    out.append(math.nan)
                    continue
                try:
                    values = assigner(profile, level)
                except EstimatorError:
                    out.append(math.nan)
                    continue
                diff = dist.probs[syms] - values
                out.append(float(np.dot(diff, diff)))
            return tuple(out)

        rows = np.array(_run_trials(config.trials, workers, one_trial), dtype=float)
        for k, level in enumerate(levels):
            per_level_grid[level].append(_aggregate(rows[:, k], n, f"{name} level {level}"))

    return {level: RiskReport(estimator_name=name, grid=tuple(points))
            for level, points in per_level_grid.items()}


# ---------------------------------------------------------------------------
# Exact risk by multinomial enumeration
# ---------------------------------------------------------------------------


def _count_vectors(n: int, d: int) -> Iterator[tuple[int, ...]]:
    if d == 1:
        yield (n,)
        return
    for k in range(n + 1):
        for rest in _count_vectors(n - k, d - 1):
            yield (k,) + rest


def multinomial_pmf(counts: Sequence[int], probs: np.ndarray) -> float:
    """Exact-coefficient multinomial probability of a count vector."""
    n = int(sum(counts))
    coeff = math.factorial(n)
    for c in counts:
        coeff //= math.factorial(c)
    return float(coeff) * float(np.prod(np.power(probs, counts)))


def exact_risk(dist: Distribution,
               estimator: Callable[[SampleProfile], Distribution],
               n: int) -> float:
    """Exact expected squared-L2 loss by enumerating all count vectors.

    The estimator must depend on the sample only through its counts (every
    estimator in this package does). Enumeration is limited to d <= 5 and
    n <= 8, i.e. at most C(13, 4) = 715 terms.
    """
    if n < 1:
        raise InputError(f"sample size must be at least 1, got {n}")
    if dist.d > MAX_EXACT_D or n > MAX_EXACT_N:
        raise InputError(
            f"exact enumeration limited to d <= {MAX_EXACT_D}, n <= {MAX_EXACT_N}; "
            f"got d={dist.d}, n={n}"
        )
    total = 0.0
    for counts in _count_vectors(n, dist.d):
        prob = multinomial_pmf(counts, dist.probs)
        if prob == 0.0:
            continue
        profile = profile_from_counts(np.array(counts, dtype=np.int64), truth=dist)
        total += prob * l2_distance_squared(dist, estimator(profile))
    return total


# ---------------------------------------------------------------------------
# Regret decomposition for the partition model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegretBreakdown:
    """Terms of the one-level minus two-level loss difference at one level:

        total_regret = gain_term + one_level_est_err
                       - two_level_est_err_low - two_level_est_err_high

    where the gain term is phi_low*phi_high/phi * (mean_low - mean_high)^2 of
    the true per-side oracle values. ``total_regret`` is computed directly
    from the two losses; the identity is checked by the test suite.
    """

    gain_term: float
    one_level_est_err: float
    two_level_est_err_low: float
    two_level_est_err_high: float
    total_regret: float


def regret_breakdown_from_profile(profile: SampleProfile, part: PartitionSideInfo,
                                  level: int) -> RegretBreakdown:
    if profile.truth is None:
        raise EstimatorError("regret breakdown needs the true distribution")
    dist = profile.truth
    syms = profile.symbols_at(level)
    if syms.size == 0:
        raise EstimatorError(f"no symbols at level {level}")

    low, high = part.split_level(profile, level)
    phi = syms.size
    probs = dist.probs

    one_value = one_level_estimate(profile, level).value
    two = two_level_estimate(profile, part, level)
    oracle_all = _level_mean(probs[syms])

    gain = 0.0
    err_low = err_high = 0.0
    if low.size:
        mean_low = _level_mean(probs[low])
        err_low = low.size * (mean_low - two.value_low) ** 2
    if high.size:
        mean_high = _level_mean(probs[high])
        err_high = high.size * (mean_high - two.value_high) ** 2
    if low.size and high.size:
        gain = low.size * high.size / phi * (mean_low - mean_high) ** 2

    q_one = level_loss(dist, profile, level, one_value)
    q_two = two_level_loss(dist, profile, part, level, two.value_low, two.value_high)
    return RegretBreakdown(
        gain_term=gain,
        one_level_est_err=phi * (oracle_all - one_value) ** 2,
        two_level_est_err_low=err_low,
        two_level_est_err_high=err_high,
        total_regret=q_one - q_two,
    )


def regret_breakdown(dist: Distribution, part: PartitionSideInfo,
                     samples: Sequence[int] | np.ndarray,
                     level: int) -> RegretBreakdown:
    """Regret decomposition for one sample; see RegretBreakdown."""
    profile = build_profile(samples, dist.d, truth=dist)
    return regret_breakdown_from_profile(profile, part, level)


@dataclass(frozen=True)
class LevelComparison:
    """Aggregated one-level vs two-level comparison at one (n, level)."""

    n: int
    level: int
    trials: int
    one_loss: float
    one_stderr: float
    two_loss: float
    two_stderr: float
    oracle_one_loss: float
    oracle_two_loss: float
    mean_gain: float
    mean_one_est_err: float
    mean_two_est_err_low: float
    mean_two_est_err_high: float
    mean_regret: float


def compare_level_estimators(dist: Distribution, part: PartitionSideInfo,
                             config: SimConfig,
                             sampler: Sampler | None = None,
                             workers: int = 1) -> tuple[LevelComparison, ...]:
    """Paired Monte Carlo comparison of the one-level and two-level
    estimators, with oracle baselines and the mean regret decomposition.

    All estimators see the same samples trial for trial, so loss differences
    are paired. Trials with an unoccupied level are excluded for that level.
    """
    if config.loss_kind != "level":
        raise InputError("level comparison needs a config with loss_kind='level'")
    if sampler is None:
        sampler = lambda n, seed: sample_iid(dist, n, seed)
    levels = config.levels
    probs = dist.probs

    out = []
    for n in config.n_grid:
        def one_trial(t: int, n: int = n) -> list[tuple[float, ...]]:
            samples = sampler(n, trial_seed(config.master_seed, n, t))
            profile = build_profile(samples, dist.d, truth=dist)
            rows = []
            for level in levels:
                syms = profile.symbols_at(level)
                if syms.size == 0:
                    rows.append((math.nan,) * 9)
                    continue
                try:
                    breakdown = regret_breakdown_from_profile(profile, part, level)
                except EstimatorError:
                    rows.append((math.nan,) * 9)
                    continue
                one_value = one_level_estimate(profile, level).value
                q_one = level_loss(dist, profile, level, one_value)
                q_two = q_one - breakdown.total_regret
                q_oracle_one = level_loss(dist, profile, level,
                                          _level_mean(probs[syms]))
                low, high = part.split_level(profile, level)
                q_oracle_two = 0.0
                for side in (low, high):
                    if side.size:
                        diff = probs[side] - _level_mean(probs[side])
                        q_oracle_two += float(diff @ diff)
                rows.append((q_one, q_two, q_oracle_one, q_oracle_two,
                             breakdown.gain_term, breakdown.one_level_est_err,
                             breakdown.two_level_est_err_low,
                             breakdown.two_level_est_err_high,
                             breakdown.total_regret))
            return rows

        trials = _run_trials(config.trials, workers, one_trial)
        for k, level in enumerate(levels):
            table = np.array([trial[k] for trial in trials], dtype=float)
            valid = table[~np.isnan(table[:, 0])]
            failures = config.trials - valid.shape[0]
            if failures > MAX_FAILURE_FRACTION * config.trials:
                raise SimulationError(
                    f"{failures}/{config.trials} trials had no level-{level} "
                    f"symbols at n={n}"
                )
            count = valid.shape[0]
            sqrt_count = math.sqrt(count)
            stderr = (lambda col: 0.0 if count < 2
                      else float(col.std(ddof=1) / sqrt_count))
            means = valid.mean(axis=0)
            out.append(LevelComparison(
                n=n, level=level, trials=count,
                one_loss=float(means[0]), one_stderr=stderr(valid[:, 0]),
                two_loss=float(means[1]), two_stderr=stderr(valid[:, 1]),
                oracle_one_loss=float(means[2]), oracle_two_loss=float(means[3]),
                mean_gain=float(means[4]), mean_one_est_err=float(means[5]),
                mean_two_est_err_low=float(means[6]),
                mean_two_est_err_high=float(means[7]),
                mean_regret=float(means[8]),
            ))
    return tuple(out)


# ---------------------------------------------------------------------------
# Synthetic distributions and ball sampling
# ---------------------------------------------------------------------------


def two_level_synthetic(d: int) -> Distribution:
    """The two-valued distribution with the first d/2 symbols at 1/(2d) and
    the rest at 3/(2d); its per-side oracle error is exactly zero."""
    if d < 2 or d % 2 != 0:
        raise InputError(f"alphabet size must be even and >= 2, got {d}")
    half = d // 2
    return Distribution(np.concatenate([
        np.full(half, 1.0 / (2 * d)),
        np.full(half, 3.0 / (2 * d)),
    ]))


def two_level_partition(d: int) -> PartitionSideInfo:
    """The matching partition: low side = first half of the alphabet."""
    if d < 2 or d % 2 != 0:
        raise InputError(f"alphabet size must be even and >= 2, got {d}")
    return PartitionSideInfo.from_low_set(np.arange(d // 2), d)


def zipf_distribution(d: int, exponent: float = 1.0) -> Distribution:
    """Power-law distribution with p_i proportional to 1/rank^exponent."""
    if d < 1:
        raise InputError("alphabet size must be positive")
    weights = np.arange(1, d + 1, dtype=float) ** (-exponent)
    return Distribution(weights / weights.sum())


def sample_in_ball(info: BallSideInfo, seed: int) -> Distribution:
    """Draw a distribution inside the side-information ball.

    Proposals move from the center toward a uniform-simplex (Dirichlet) draw;
    half the proposals stop at the ball boundary, since worst cases sit near
    it, and half stop at a uniform fraction of the feasible step. Membership
    is re-checked before returning.
    """
    rng = rng_from_seed(seed)
    center = info.center.probs
    ones = np.ones(info.center.d)
    for _ in range(_BALL_MAX_PROPOSALS):
        target = rng.dirichlet(ones)
        step = target - center
        distance = float(np.linalg.norm(step))
        if distance == 0.0:
            candidate = info.center
        else:
            s_max = min(1.0, info.radius / distance)
            s = s_max if rng.random() < 0.5 else s_max * rng.random()
            candidate = Distribution(center + s * step)
        if ball_contains(info, candidate):
            return candidate
    raise SimulationError(
        f"no in-ball draw after {_BALL_MAX_PROPOSALS} proposals "
        f"(radius {info.radius} may be infeasibly small for d={info.center.d})"
    )
