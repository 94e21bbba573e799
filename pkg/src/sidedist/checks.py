"""Numeric validity suite: algebraic identities, construction guarantees, and
the exact-risk oracle, each reduced to a worst-case residual with a pinned
tolerance. Backs the `verify` CLI command."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bounds, estimators, sim
from .core import (
    BallSideInfo,
    Distribution,
    PartitionSideInfo,
    ball_contains,
    build_profile,
    l2_distance_squared,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    statistic: float
    tolerance: float
    passed: bool


def _random_distribution(rng: np.random.Generator, d: int) -> Distribution:
    return Distribution(rng.dirichlet(np.ones(d)))


def _random_partition(rng: np.random.Generator, d: int) -> PartitionSideInfo:
    size = int(rng.integers(1, d))
    low = rng.choice(d, size=size, replace=False)
    return PartitionSideInfo.from_low_set(low, d)


def check_empirical_risk_exact(rng: np.random.Generator) -> CheckResult:
    """Enumerated risk of the empirical estimator equals (1 - |p|^2) / n."""
    worst = 0.0
    for _ in range(10):
        dist = _random_distribution(rng, 3)
        closed = 1.0 - dist.l2_norm() ** 2
        for n in range(1, 5):
            exact = sim.exact_risk(dist, estimators.empirical, n)
            worst = max(worst, abs(exact - closed / n))
    return CheckResult("empirical_risk_exact", worst, 1e-12, worst < 1e-12)


def check_level_loss_decomposition(rng: np.random.Generator) -> CheckResult:
    """Q_l(value) = oracle error + phi_l * (oracle - value)^2."""
    worst = 0.0
    for _ in range(200):
        d = int(rng.integers(3, 20))
        dist = _random_distribution(rng, d)
        n = int(rng.integers(1, 60))
        profile = build_profile(sim.sample_iid(dist, n, int(rng.integers(2**63))),
                                d, truth=dist)
        for level in (0, 1, 2):
            syms = profile.symbols_at(level)
            if syms.size == 0:
                continue
            value = float(rng.random())
            oracle = estimators.oracle_level(profile, level)
            direct = estimators.level_loss(dist, profile, level, value)
            oracle_err = estimators.level_loss(dist, profile, level, oracle)
            decomposed = oracle_err + syms.size * (oracle - value) ** 2
            worst = max(worst, abs(direct - decomposed))
    return CheckResult("level_loss_decomposition", worst, 1e-12, worst < 1e-12)


def check_oracle_split_identity(rng: np.random.Generator) -> CheckResult:
    """phi * oracle = phi_low * oracle_low + phi_high * oracle_high."""
    worst = 0.0
    done = 0
    while done < 200:
        d = int(rng.integers(4, 30))
        dist = _random_distribution(rng, d)
        part = _random_partition(rng, d)
        n = int(rng.integers(2, 80))
        profile = build_profile(sim.sample_iid(dist, n, int(rng.integers(2**63))),
                                d, truth=dist)
        level = int(rng.integers(0, 3))
        low, high = part.split_level(profile, level)
        if low.size == 0 or high.size == 0:
            continue
        oracle = estimators.oracle_level(profile, level)
        oracle_low, oracle_high = estimators.oracle_two_level(profile, part, level)
        lhs = (low.size + high.size) * oracle
        rhs = low.size * oracle_low + high.size * oracle_high
        worst = max(worst, abs(lhs - rhs))
        done += 1
    return CheckResult("oracle_split_identity", worst, 1e-14, worst < 1e-14)


def check_regret_identity(rng: np.random.Generator) -> CheckResult:
    """Directly computed regret matches its four-term decomposition."""
    worst = 0.0
    done = 0
    while done < 200:
        d = int(rng.integers(4, 30))
        dist = _random_distribution(rng, d)
        part = _random_partition(rng, d)
        n = int(rng.integers(2, 100))
        samples = sim.sample_iid(dist, n, int(rng.integers(2**63)))
        profile = build_profile(samples, d, truth=dist)
        level = int(rng.integers(0, min(3, n)))
        if profile.phi_at(level) == 0:
            continue
        b = sim.regret_breakdown_from_profile(profile, part, level)
        recomposed = (b.gain_term + b.one_level_est_err
                      - b.two_level_est_err_low - b.two_level_est_err_high)
        worst = max(worst, abs(b.total_regret - recomposed))
        done += 1
    return CheckResult("regret_identity", worst, 1e-10, worst < 1e-10)


def check_trace_identity(rng: np.random.Generator) -> CheckResult:
    """Sum of basis quadratic forms equals 1 - |pi0|^2 on the complement."""
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 40))
        dist = _random_distribution(rng, d)
        basis = bounds.perp_basis(np.sqrt(dist.probs))
        total = float(np.einsum("ik,i,ik->", basis, dist.probs, basis))
        worst = max(worst, abs(total - (1.0 - dist.l2_norm() ** 2)))
    return CheckResult("trace_identity", worst, 1e-10, worst < 1e-10)


def check_direction_optimality(rng: np.random.Generator) -> CheckResult:
    """Best direction achieves at least the complement average weight."""
    worst_margin = math.inf
    for _ in range(50):
        d = int(rng.integers(2, 40))
        dist = _random_distribution(rng, d)
        g = bounds.best_direction(dist)
        value = float(g @ (dist.probs * g))
        floor = (1.0 - dist.l2_norm() ** 2) / (d - 1)
        worst_margin = min(worst_margin, value - floor)
    return CheckResult("direction_optimality", worst_margin, -1e-12,
                       worst_margin >= -1e-12)


def check_two_point_pair(rng: np.random.Generator) -> CheckResult:
    """Two-point pairs stay in the ball, split by 8 tau^2, keep KL small."""
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(3, 30))
        dist = _random_distribution(rng, d)
        delta = float(rng.uniform(0.02, 1.0))
        n = int(rng.integers(1, 10_000))
        pair = bounds.lecam_pair(dist, delta, n)
        info = BallSideInfo(dist, delta)
        if not (ball_contains(info, pair.plus) and ball_contains(info, pair.minus)):
            return CheckResult("two_point_pair", math.inf, 1e-10, False)
        separation = l2_distance_squared(pair.plus, pair.minus)
        worst = max(worst, abs(separation - 8.0 * pair.tau ** 2))
        kl_slack = bounds.kl(pair.plus, pair.minus) - 80.0 * pair.tau ** 2 / delta
        worst = max(worst, kl_slack)
    return CheckResult("two_point_pair", worst, 1e-10, worst < 1e-10)


def check_hypercube_vertices(rng: np.random.Generator) -> CheckResult:
    """All d=6 hypercube vertices are in-ball distributions with bounded
    neighbor KL."""
    d = 6
    delta = 0.3
    tau = min(1.0 / (2 * d), delta / math.sqrt(d))
    cube = bounds.AssouadCube(d=d, tau=tau)
    info = BallSideInfo(Distribution.uniform(d), delta)
    vertices = dict(cube.vertices())
    worst = 0.0
    for signs, vertex in vertices.items():
        if not ball_contains(info, vertex):
            return CheckResult("hypercube_vertices", math.inf, 1e-10, False)
        for k in range(d // 2):
            flipped = list(signs)
            flipped[k] = -flipped[k]
            neighbor = vertices[tuple(flipped)]
            slack = bounds.kl(vertex, neighbor) - 8.0 * d * tau * tau
            worst = max(worst, slack)
    return CheckResult("hypercube_vertices", worst, 1e-10, worst < 1e-10)


def check_sqrt_perturbation(rng: np.random.Generator) -> CheckResult:
    """Square-root perturbations keep |theta|^2 = 1 + tau^2 and move the
    distribution by at most 12 tau^2."""
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 40))
        dist = _random_distribution(rng, d)
        tau = float(rng.uniform(0.0, 0.2))
        pert = bounds.sqrt_perturbation(dist, tau)
        theta = pert.theta0 + pert.tau * pert.direction
        worst = max(worst, abs(float(theta @ theta) - (1.0 + tau * tau)))
        move = l2_distance_squared(pert.result, dist)
        worst = max(worst, move - 12.0 * tau * tau)
    return CheckResult("sqrt_perturbation", worst, 1e-12, worst < 1e-12)


def check_interpolation_weight(rng: np.random.Generator) -> CheckResult:
    """The returned mixing weight minimizes the worst-case risk proxy over a
    grid of weights."""
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 30))
        dist = _random_distribution(rng, d)
        delta = float(rng.uniform(0.01, 1.0))
        n = int(rng.integers(1, 5000))
        norm = dist.l2_norm()
        c1 = (1.0 - (norm - delta) ** 2) / n

        def proxy(a: float) -> float:
            return a * a * c1 + (1.0 - a) ** 2 * delta * delta

        alpha = estimators.interpolation_alpha(n, delta, norm)
        grid_min = min(proxy(k / 100.0) for k in range(101))
        worst = max(worst, proxy(alpha) - grid_min)
    return CheckResult("interpolation_weight", worst, 1e-15, worst < 1e-15)


def check_bound_ordering(rng: np.random.Generator) -> CheckResult:
    """Every lower bound sits below the matched upper bound on a grid."""
    violations = 0
    deltas = [0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0]
    for n in (1, 2, 5, 10, 100, 1000, 10_000):
        for d in (2, 4, 10, 50, 100):
            for delta in deltas:
                ub_point = bounds.ub_interpolation(n, d, 1.0, delta).value
                if bounds.lb_lecam(n, delta).value > ub_point:
                    violations += 1
                norm = 1.0 / math.sqrt(d)
                ub_unif = bounds.ub_interpolation(n, d, norm, delta).value
                if n >= d and d % 2 == 0:
                    if bounds.lb_uniform(n, d, delta).value > ub_unif:
                        violations += 1
                if bounds.lb_general(n, d, norm, delta).value > ub_unif:
                    violations += 1
    return CheckResult("bound_ordering", float(violations), 0.0, violations == 0)


def check_good_turing_consistency(rng: np.random.Generator) -> CheckResult:
    """One-level estimates imply exactly the Good-Turing level mass."""
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(3, 30))
        dist = _random_distribution(rng, d)
        n = int(rng.integers(2, 50))
        profile = build_profile(sim.sample_iid(dist, n, int(rng.integers(2**63))), d)
        for level in range(0, min(3, n)):
            if profile.phi_at(level) == 0:
                continue
            est = estimators.one_level_estimate(profile, level)
            worst = max(worst, abs(est.implied_mass
                                   - estimators.good_turing_mass(profile, level)))
    return CheckResult("good_turing_consistency", worst, 0.0, worst == 0.0)


ALL_CHECKS: tuple[Callable[[np.random.Generator], CheckResult], ...] = (
    check_empirical_risk_exact,
    check_level_loss_decomposition,
    check_oracle_split_identity,
    check_regret_identity,
    check_trace_identity,
    check_direction_optimality,
    check_two_point_pair,
    check_hypercube_vertices,
    check_sqrt_perturbation,
    check_interpolation_weight,
    check_bound_ordering,
    check_good_turing_consistency,
)


def run_checks(seed: int = 0) -> list[CheckResult]:
    """Run the whole suite, each check on its own deterministic stream."""
    results = []
    for k, check in enumerate(ALL_CHECKS):
        rng = sim.rng_from_seed(sim.trial_seed(seed, 0, k))
        results.append(check(rng))
    return results
