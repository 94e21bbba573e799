"""Closed-form minimax bound formulas for the ball model, divergence
utilities, and the lower-bound constructions as executable objects.

The constructions (two-point pairs, sign-hypercube vertices, square-root
perturbations) materialize the distributions behind the lower bounds so their
claimed properties can be checked numerically instead of on paper.

Divergence cross-checks asserted elsewhere use the standard chain
tv <= H * sqrt(1 - H^2/4) and Pinsker tv <= sqrt(kl/2); the weaker form
tv <= sqrt(H/2) is deliberately not relied on.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg

from .core import (
    BallSideInfo,
    ConstructionError,
    Distribution,
    InputError,
    ball_contains,
)

# Largest alphabet solved with a dense eigendecomposition; above this the
# direction search falls back to power iteration.
EXACT_EIG_MAX_D = 2000
_POWER_TOL = 1e-8
_POWER_MAX_ITER = 10_000


@dataclass(frozen=True)
class BoundValue:
    """One evaluated bound with the parameters it was evaluated at.

    ``name`` is one of ub_interp, lb_lecam, lb_uniform, lb_general.
    """

    name: str
    value: float
    n: int
    delta: float
    d: int | None = None
    center_norm: float | None = None

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ConstructionError("bound values are nonnegative")


def _check_same_d(p: Distribution, q: Distribution) -> None:
    if p.d != q.d:
        raise InputError(f"dimension mismatch: {p.d} vs {q.d}")


def kl(p: Distribution, q: Distribution) -> float:
    """Relative entropy sum p_i log(p_i/q_i), with 0 log 0 = 0 and +inf on
    support mismatch."""
    _check_same_d(p, q)
    support = p.probs > 0
    ps = p.probs[support]
    qs = q.probs[support]
    if np.any(qs == 0.0):
        return math.inf
    return float(np.sum(ps * np.log(ps / qs)))


def tv(p: Distribution, q: Distribution) -> float:
    """Total variation distance, half the L1 distance."""
    _check_same_d(p, q)
    return 0.5 * float(np.abs(p.probs - q.probs).sum())


def hellinger(p: Distribution, q: Distribution) -> float:
    """Unsquared Hellinger distance, the L2 norm of sqrt(p) - sqrt(q).

    Ranges over [0, sqrt(2)] in this convention.
    """
    _check_same_d(p, q)
    return float(np.linalg.norm(np.sqrt(p.probs) - np.sqrt(q.probs)))


def _validate_common(n: int, delta: float) -> None:
    if n < 1:
        raise InputError(f"sample size must be at least 1, got {n}")
    if not 0.0 < delta <= 1.0:
        raise InputError(f"ball radius must be in (0, 1], got {delta!r}")


def ub_interpolation(n: int, d: int, center_norm: float, delta: float) -> BoundValue:
    """Worst-case risk bound min(delta^2, (1 - (center_norm - delta)^2) / n)
    achieved by the interpolation estimator at its optimal weight."""
    _validate_common(n, delta)
    if d < 1:
        raise InputError(f"alphabet size must be positive, got {d}")
    if not 1.0 / math.sqrt(d) - 1e-12 <= center_norm <= 1.0 + 1e-12:
        raise InputError(
            f"center norm {center_norm!r} outside [1/sqrt(d), 1] for d={d}"
        )
    value = min(delta * delta, (1.0 - (center_norm - delta) ** 2) / n)
    return BoundValue("ub_interp", value, n=n, delta=delta, d=d, center_norm=center_norm)


def lb_lecam(n: int, delta: float) -> BoundValue:
    """Two-point minimax lower bound min(delta^2/32, delta/(100 n)) * e^(-4/5),
    valid for every center and alphabet size."""
    _validate_common(n, delta)
    value = min(delta * delta / 32.0, delta / (100.0 * n)) * math.exp(-0.8)
    return BoundValue("lb_lecam", value, n=n, delta=delta)


def lb_uniform(n: int, d: int, delta: float) -> BoundValue:
    """Sign-hypercube minimax lower bound min(delta^2, 1/n) * e^(-2) / 8 for a
    uniform center. Needs n >= d; d must be even (pad the alphabet with a
    zero-probability symbol if necessary)."""
    _validate_common(n, delta)
    if d < 2 or d % 2 != 0:
        raise InputError(f"alphabet size must be even and >= 2, got {d}")
    if n < d:
        raise InputError(f"uniform-center bound needs n >= d, got n={n}, d={d}")
    value = min(delta * delta, 1.0 / n) * math.exp(-2.0) / 8.0
    return BoundValue("lb_uniform", value, n=n, delta=delta, d=d,
                      center_norm=1.0 / math.sqrt(d))


def lb_general(n: int, d: int, center_norm: float, delta: float) -> BoundValue:
    """General-center lower bound
    ((1 - center_norm^2) / (d - 1)) * min(delta^2/12, 1/(4 n))."""
    _validate_common(n, delta)
    if d < 2:
        raise InputError(f"general-center bound needs d >= 2, got {d}")
    if not 0.0 <= center_norm <= 1.0 + 1e-12:
        raise InputError(f"center norm must be in [0, 1], got {center_norm!r}")
    value = (1.0 - min(center_norm, 1.0) ** 2) / (d - 1) \
        * min(delta * delta / 12.0, 1.0 / (4.0 * n))
    return BoundValue("lb_general", value, n=n, delta=delta, d=d,
                      center_norm=center_norm)


# ---------------------------------------------------------------------------
# Two-point construction
# ---------------------------------------------------------------------------


def mass_rearrange(pi0: Distribution, delta: float) -> tuple[Distribution, int, int]:
    """Move probability so that two coordinates reach at least delta/sqrt(12),
    changing the vector by at most delta^2/2 in squared L2.

    The two target coordinates are the two largest (ties break to the lower
    index); the mass is drained greedily from the largest coordinates that sit
    above their floor. Returns (rearranged, i, j).
    """
    if pi0.d < 3:
        raise ConstructionError("mass rearrangement needs at least 3 symbols")
    if not 0.0 < delta <= 1.0:
        raise ConstructionError(f"radius must be in (0, 1], got {delta!r}")
    floor = delta / math.sqrt(12.0)
    probs = pi0.probs.copy()
    order = np.argsort(-probs, kind="stable")
    i, j = int(order[0]), int(order[1])
    need = max(floor - probs[i], 0.0) + max(floor - probs[j], 0.0)
    probs[i] = max(probs[i], floor)
    probs[j] = max(probs[j], floor)
    floors = np.zeros(pi0.d)
    floors[i] = floors[j] = floor
    # Always feasible: removable mass is 1 + need - 2*floor >= need for delta <= 1.
    for k in np.argsort(-probs, kind="stable"):
        if need <= 0.0:
            break
        take = min(probs[k] - floors[k], need)
        if take > 0.0:
            probs[k] -= take
            need -= take
    if need > 0.0:
        raise ConstructionError("mass rearrangement infeasible")  # unreachable for d >= 3
    return Distribution(probs), i, j


@dataclass(frozen=True, eq=False)
class LeCamPair:
    """A two-point pair inside the side-information ball: the rearranged
    center plus/minus tau on coordinates (i, j). The pair is maximally hard to
    tell apart from n samples while staying tau-separated."""

    plus: Distribution
    minus: Distribution
    tau: float
    rearranged: Distribution
    indices: tuple[int, int]


def lecam_pair(pi0: Distribution, delta: float, n: int) -> LeCamPair:
    """Construct the two-point pair with tau = min(delta/sqrt(32),
    sqrt(delta/n)/10). Both members are validated to lie in the ball."""
    if n < 1:
        raise ConstructionError(f"sample size must be at least 1, got {n}")
    rearranged, i, j = mass_rearrange(pi0, delta)
    tau = min(delta / math.sqrt(32.0), 0.1 * math.sqrt(delta / n))
    plus = rearranged.probs.copy()
    plus[i] += tau
    plus[j] -= tau
    minus = rearranged.probs.copy()
    minus[i] -= tau
    minus[j] += tau
    pair = LeCamPair(
        plus=Distribution(plus),
        minus=Distribution(minus),
        tau=tau,
        rearranged=rearranged,
        indices=(i, j),
    )
    info = BallSideInfo(pi0, delta)
    if not (ball_contains(info, pair.plus) and ball_contains(info, pair.minus)):
        raise ConstructionError("two-point pair left the side-information ball")
    return pair


# ---------------------------------------------------------------------------
# Sign-hypercube construction
# ---------------------------------------------------------------------------


def assouad_vertex(d: int, tau: float, signs: Sequence[int]) -> Distribution:
    """Hypercube vertex (1/d + tau*v_1, 1/d - tau*v_1, ...) for a sign vector
    v of length d/2. Requires tau <= 1/(2d) so neighboring vertices stay
    KL-close; ball membership for a given radius is the caller's check."""
    if d < 2 or d % 2 != 0:
        raise ConstructionError(f"alphabet size must be even and >= 2, got {d}")
    v = np.asarray(signs)
    if v.shape != (d // 2,) or not np.all(np.isin(v, (-1, 1))):
        raise ConstructionError(f"need a length-{d // 2} vector of +/-1 signs")
    if not 0.0 <= tau <= 1.0 / (2 * d) + 1e-15:
        raise ConstructionError(
            f"perturbation {tau!r} outside [0, 1/(2d)] for d={d}"
        )
    probs = np.empty(d)
    probs[0::2] = 1.0 / d + tau * v
    probs[1::2] = 1.0 / d - tau * v
    return Distribution(probs)


@dataclass(frozen=True)
class AssouadCube:
    """The implicit family of all 2^(d/2) hypercube vertices at one tau."""

    d: int
    tau: float

    def __post_init__(self) -> None:
        assouad_vertex(self.d, self.tau, np.ones(self.d // 2, dtype=int))

    def vertex(self, signs: Sequence[int]) -> Distribution:
        return assouad_vertex(self.d, self.tau, signs)

    def vertices(self) -> Iterator[tuple[tuple[int, ...], Distribution]]:
        """All vertices; 2^(d/2) of them, so keep d small."""
        for signs in itertools.product((-1, 1), repeat=self.d // 2):
            yield signs, self.vertex(signs)


# ---------------------------------------------------------------------------
# Square-root coordinate perturbation
# ---------------------------------------------------------------------------


def perp_basis(theta0: np.ndarray) -> np.ndarray:
    """Orthonormal basis (d x (d-1)) of the hyperplane orthogonal to the unit
    vector theta0, from a Householder reflector."""
    theta0 = np.asarray(theta0, dtype=float)
    d = theta0.size
    sign = 1.0 if theta0[0] >= 0 else -1.0
    v = theta0.copy()
    v[0] += sign
    reflector = np.eye(d) - (2.0 / (v @ v)) * np.outer(v, v)
    return reflector[:, 1:]


def best_direction(pi0: Distribution) -> np.ndarray:
    """Unit vector g orthogonal to sqrt(pi0) maximizing sum_i g_i^2 * pi0_i.

    The maximum is the top eigenvalue of the diagonal weight matrix projected
    onto the orthogonal complement, so it is at least the complement average
    (1 - |pi0|^2) / (d - 1).
    """
    if pi0.d < 2:
        raise InputError("direction search needs at least 2 symbols")
    theta0 = np.sqrt(pi0.probs)
    if pi0.d <= EXACT_EIG_MAX_D:
        basis = perp_basis(theta0)
        projected = basis.T @ (pi0.probs[:, None] * basis)
        projected = 0.5 * (projected + projected.T)
        _, vecs = scipy.linalg.eigh(projected)
        g = basis @ vecs[:, -1]
    else:
        g = _power_direction(pi0.probs, theta0)
    return g / np.linalg.norm(g)


def _power_direction(probs: np.ndarray, theta0: np.ndarray) -> np.ndarray:
    def apply(v: np.ndarray) -> np.ndarray:
        v = v - (v @ theta0) * theta0
        v = probs * v
        return v - (v @ theta0) * theta0

    start = np.zeros(probs.size)
    start[int(np.argmax(probs))] = 1.0
    v = start - (start @ theta0) * theta0
    norm = np.linalg.norm(v)
    if norm < 1e-12:  # start collided with theta0; any other axis works
        start = np.zeros(probs.size)
        start[int(np.argmin(probs))] = 1.0
        v = start - (start @ theta0) * theta0
        norm = np.linalg.norm(v)
    v /= norm
    value = 0.0
    for _ in range(_POWER_MAX_ITER):
        w = apply(v)
        new_value = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            break
        v = w / norm
        if abs(new_value - value) <= _POWER_TOL * max(abs(new_value), 1e-300):
            value = new_value
            break
        value = new_value
    return v


@dataclass(frozen=True, eq=False)
class SqrtPerturbation:
    """A distribution perturbed along a direction in square-root coordinates:
    result = (sqrt(base) + tau*direction)^2 / (1 + tau^2)."""

    base: Distribution
    theta0: np.ndarray
    direction: np.ndarray
    tau: float
    result: Distribution


def sqrt_perturbation(pi0: Distribution, tau: float,
                      direction: np.ndarray | None = None) -> SqrtPerturbation:
    """Perturb pi0 in square-root coordinates.

    ``direction`` must be a unit vector orthogonal to sqrt(pi0); omitted, the
    risk-maximizing direction from :func:`best_direction` is used. The result
    satisfies |result - pi0|^2 <= 12 tau^2, so tau <= radius/sqrt(12) keeps it
    inside a ball of that radius.
    """
    if not 0.0 <= tau <= 1.0:
        raise ConstructionError(f"perturbation size must be in [0, 1], got {tau!r}")
    theta0 = np.sqrt(pi0.probs)
    if direction is None:
        g = best_direction(pi0)
    else:
        g = np.asarray(direction, dtype=float)
        if g.shape != theta0.shape:
            raise ConstructionError("direction has the wrong dimension")
        if abs(np.linalg.norm(g) - 1.0) > 1e-10:
            raise ConstructionError("direction must have unit norm")
        if abs(g @ theta0) > 1e-10:
            raise ConstructionError("direction must be orthogonal to sqrt(pi0)")
        # Numerical hygiene: re-project and renormalize within the tolerance.
        g = g - (g @ theta0) * theta0
        g = g / np.linalg.norm(g)
    theta = theta0 + tau * g
    result = Distribution(theta * theta / (1.0 + tau * tau))
    theta0 = theta0.copy()
    theta0.setflags(write=False)
    g = g.copy()
    g.setflags(write=False)
    return SqrtPerturbation(base=pi0, theta0=theta0, direction=g, tau=tau, result=result)
