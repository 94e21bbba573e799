"""Core types: distributions, sample profiles, and side-information containers.

Symbols are dense integer indices 0..d-1 with d known up front. All types are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

# Absolute tolerance on sum(probs) == 1. Inputs further off are rejected,
# never silently renormalized.
NORMALIZATION_ATOL = 1e-12

# Slack used for closed-ball membership tests.
BALL_ATOL = 1e-12


class InputError(ValueError):
    """Invalid user-supplied data: bad file, out-of-range symbol, bad parameter."""


class EstimatorError(ValueError):
    """An estimator was evaluated where it is undefined."""


class EmptyLevelError(EstimatorError):
    """A level estimate was requested for a level with no occupants."""


class ConstructionError(ValueError):
    """A lower-bound construction received parameters outside its valid range."""


class SimulationError(RuntimeError):
    """A simulation could not complete under its failure policy."""


@dataclass(frozen=True, eq=False)
class Distribution:
    """A probability vector over the alphabet {0, ..., d-1}.

    Entries must be nonnegative and sum to 1 within ``NORMALIZATION_ATOL``.
    Zero entries are allowed so empirical estimates and corner constructions
    (for example a point mass) are representable.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size < 1:
            raise InputError("distribution must be a nonempty 1-D vector")
        if not np.all(np.isfinite(probs)):
            raise InputError("distribution entries must be finite")
        if np.any(probs < 0.0):
            raise InputError("distribution entries must be nonnegative")
        total = float(probs.sum())
        if abs(total - 1.0) > NORMALIZATION_ATOL:
            raise InputError(
                f"probabilities sum to {total!r}, not 1 within {NORMALIZATION_ATOL}"
            )
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def d(self) -> int:
        return self.probs.size

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.probs))

    def mass_of(self, symbols: Sequence[int] | np.ndarray) -> float:
        """Total probability of a set of symbols."""
        idx = np.asarray(symbols, dtype=np.intp)
        return float(self.probs[idx].sum())

    @classmethod
    def uniform(cls, d: int) -> "Distribution":
        if d < 1:
            raise InputError("alphabet size must be positive")
        return cls(np.full(d, 1.0 / d))

    @classmethod
    def point_mass(cls, d: int, symbol: int = 0) -> "Distribution":
        if d < 1:
            raise InputError("alphabet size must be positive")
        if not 0 <= symbol < d:
            raise InputError(f"symbol {symbol} outside alphabet of size {d}")
        probs = np.zeros(d)
        probs[symbol] = 1.0
        return cls(probs)


def l2_distance_squared(p: Distribution, q: Distribution) -> float:
    """Squared L2 distance between two distributions on the same alphabet."""
    if p.d != q.d:
        raise InputError(f"dimension mismatch: {p.d} vs {q.d}")
    diff = p.probs - q.probs
    return float(diff @ diff)


@dataclass(frozen=True, eq=False)
class BallSideInfo:
    """Side information of the form: the truth lies within ``radius`` (L2) of
    ``center``."""

    center: Distribution
    radius: float

    def __post_init__(self) -> None:
        if not 0.0 < self.radius <= 1.0:
            raise InputError(f"ball radius must be in (0, 1], got {self.radius!r}")


def ball_contains(info: BallSideInfo, p: Distribution) -> bool:
    """Closed-ball membership with a small numerical slack."""
    return math.sqrt(l2_distance_squared(info.center, p)) <= info.radius + BALL_ATOL


@dataclass(frozen=True, eq=False)
class PartitionSideInfo:
    """Side information: the alphabet splits into a low-probability set and a
    high-probability set. Both sides must be nonempty and together cover the
    alphabet exactly."""

    low_set: np.ndarray
    high_set: np.ndarray

    def __post_init__(self) -> None:
        low = np.unique(np.asarray(self.low_set, dtype=np.intp))
        high = np.unique(np.asarray(self.high_set, dtype=np.intp))
        if low.size == 0 or high.size == 0:
            raise InputError("both partition sides must be nonempty")
        d = low.size + high.size
        merged = np.concatenate([low, high])
        merged.sort()
        if not np.array_equal(merged, np.arange(d)):
            raise InputError("partition sides must be disjoint and cover 0..d-1")
        mask = np.zeros(d, dtype=bool)
        mask[low] = True
        low.setflags(write=False)
        high.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "low_set", low)
        object.__setattr__(self, "high_set", high)
        object.__setattr__(self, "_low_mask", mask)

    @property
    def d(self) -> int:
        return self.low_set.size + self.high_set.size

    @property
    def low_mask(self) -> np.ndarray:
        """Boolean mask of length d, True on the low side."""
        return self._low_mask  # type: ignore[attr-defined]

    @classmethod
    def from_low_set(cls, low: Sequence[int] | np.ndarray, d: int) -> "PartitionSideInfo":
        low = np.unique(np.asarray(low, dtype=np.intp))
        if low.size and (low[0] < 0 or low[-1] >= d):
            raise InputError("partition indices outside alphabet")
        high = np.setdiff1d(np.arange(d), low)
        return cls(low, high)

    def side_counts(self, profile: "SampleProfile") -> tuple[int, int]:
        """Number of samples that landed in each side."""
        low_n = int(profile.counts[self.low_set].sum())
        return low_n, profile.n - low_n

    def split_level(self, profile: "SampleProfile", level: int) -> tuple[np.ndarray, np.ndarray]:
        """Occupants of the level, split into (low-side, high-side) symbols."""
        syms = profile.symbols_at(level)
        in_low = self.low_mask[syms]
        return syms[in_low], syms[~in_low]

    def split_phi(self, profile: "SampleProfile", level: int) -> tuple[int, int]:
        low, high = self.split_level(profile, level)
        return low.size, high.size

    def side_masses(self, dist: Distribution) -> tuple[float, float]:
        """True probability of each side under ``dist``."""
        low = dist.mass_of(self.low_set)
        return low, float(dist.probs.sum()) - low


@dataclass(frozen=True, eq=False)
class SampleProfile:
    """Occupancy summary of an i.i.d. sample: per-symbol counts, the sets of
    symbols seen exactly l times, and their sizes.

    ``mass`` and ``truth`` are populated only in simulation mode, when the
    sampling distribution is known; ``mass[l]`` is the total true probability
    of the symbols seen exactly l times.
    """

    n: int
    counts: np.ndarray
    occupancy: Mapping[int, np.ndarray]
    phi: Mapping[int, int]
    mass: Mapping[int, float] | None
    truth: Distribution | None

    @property
    def d(self) -> int:
        return self.counts.size

    def phi_at(self, level: int) -> int:
        return self.phi.get(level, 0)

    def symbols_at(self, level: int) -> np.ndarray:
        return self.occupancy.get(level, _EMPTY_SYMBOLS)

    def mass_at(self, level: int) -> float:
        if self.mass is None:
            raise EstimatorError("level masses need the true distribution")
        return self.mass.get(level, 0.0)


_EMPTY_SYMBOLS = np.empty(0, dtype=np.intp)
_EMPTY_SYMBOLS.setflags(write=False)


def profile_from_counts(counts: Sequence[int] | np.ndarray,
                        truth: Distribution | None = None) -> SampleProfile:
    """Build a profile directly from a per-symbol count vector."""
    counts = np.asarray(counts)
    if counts.ndim != 1 or counts.size < 1:
        raise InputError("counts must be a nonempty 1-D vector")
    if np.any(counts < 0):
        raise InputError("counts must be nonnegative")
    counts = counts.astype(np.int64)
    d = counts.size
    if truth is not None and truth.d != d:
        raise InputError(f"truth has {truth.d} symbols, counts have {d}")

    occupancy: dict[int, np.ndarray] = {}
    phi: dict[int, int] = {}
    for level in np.unique(counts):
        syms = np.flatnonzero(counts == level).astype(np.intp)
        syms.setflags(write=False)
        occupancy[int(level)] = syms
        phi[int(level)] = syms.size

    mass: dict[int, float] | None = None
    if truth is not None:
        mass = {level: float(truth.probs[syms].sum())
                for level, syms in occupancy.items()}

    counts.setflags(write=False)
    return SampleProfile(
        n=int(counts.sum()),
        counts=counts,
        occupancy=MappingProxyType(occupancy),
        phi=MappingProxyType(phi),
        mass=MappingProxyType(mass) if mass is not None else None,
        truth=truth,
    )


def build_profile(samples: Sequence[int] | np.ndarray, alphabet_size: int,
                  truth: Distribution | None = None) -> SampleProfile:
    """Count a sample sequence into a profile over a known alphabet.

    Order of the samples is irrelevant. Symbols must lie in 0..alphabet_size-1.
    """
    if alphabet_size < 1:
        raise InputError("alphabet size must be positive")
    samples = np.asarray(samples, dtype=np.int64)
    if samples.ndim != 1:
        samples = samples.reshape(-1)
    if samples.size:
        lo, hi = int(samples.min()), int(samples.max())
        if lo < 0 or hi >= alphabet_size:
            raise InputError(
                f"sample symbol out of range: saw {lo if lo < 0 else hi}, "
                f"alphabet size is {alphabet_size}"
            )
    counts = np.bincount(samples, minlength=alphabet_size)
    return profile_from_counts(counts, truth=truth)


@dataclass(frozen=True)
class RiskGridPoint:
    """Monte Carlo loss estimate at one sample size."""

    n: int
    loss: float
    stderr: float
    trials: int

    def __post_init__(self) -> None:
        if self.loss < 0 or self.stderr < 0:
            raise InputError("loss and stderr must be nonnegative")


@dataclass(frozen=True, eq=False)
class RiskReport:
    """Per-estimator expected-loss estimates over a grid of sample sizes,
    optionally with bound overlays keyed by bound name."""

    estimator_name: str
    grid: tuple[RiskGridPoint, ...]
    bounds: tuple[tuple[int, float, Mapping[str, float]], ...] | None = None

    def __post_init__(self) -> None:
        ns = [point.n for point in self.grid]
        if ns != sorted(ns):
            raise InputError("risk grid must be sorted by n")


# ---------------------------------------------------------------------------
# File formats: distribution and counts CSVs (UTF-8, LF or CRLF, header
# optional). Distribution rows are `index,prob`; counts rows are `index,count`.
# ---------------------------------------------------------------------------


def _read_indexed_csv(path: str, value_name: str,
                      parse: Callable[[str], float]) -> dict[int, float]:
    rows: dict[int, float] = {}
    try:
        handle = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    with handle:
        try:
            reader = csv.reader(handle)
            for lineno, row in enumerate(reader, start=1):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 2:
                    raise InputError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
                first = row[0].strip()
                if lineno == 1 and not first.lstrip("-").isdigit():
                    continue  # header line
                try:
                    idx = int(first)
                    val = parse(row[1].strip())
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: {exc}") from exc
                if idx in rows:
                    raise InputError(f"{path}:{lineno}: duplicate index {idx}")
                rows[idx] = val
        except UnicodeDecodeError as exc:
            raise InputError(f"{path}: not valid UTF-8: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: no {value_name} rows found")
    return rows


def read_distribution_csv(path: str) -> Distribution:
    """Read an `index,prob` CSV. Indices must cover 0..d-1 exactly once."""
    rows = _read_indexed_csv(path, "probability", float)
    d = max(rows) + 1
    if sorted(rows) != list(range(d)):
        raise InputError(f"{path}: indices must cover 0..{d - 1} exactly once")
    return Distribution(np.array([rows[i] for i in range(d)]))


def write_distribution_csv(dist: Distribution, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["index", "prob"])
        for i, p in enumerate(dist.probs):
            writer.writerow([i, repr(float(p))])


def read_counts_csv(path: str, alphabet_size: int) -> np.ndarray:
    """Read an `index,count` CSV into a dense count vector of the given size.

    Missing indices count as zero; the alphabet size must be supplied because
    unseen symbols cannot be inferred from the file.
    """
    if alphabet_size < 1:
        raise InputError("alphabet size must be positive")
    rows = _read_indexed_csv(path, "count", lambda s: float(int(s)))
    counts = np.zeros(alphabet_size, dtype=np.int64)
    for idx, val in rows.items():
        if not 0 <= idx < alphabet_size:
            raise InputError(f"{path}: index {idx} outside alphabet of size {alphabet_size}")
        if val < 0:
            raise InputError(f"{path}: negative count at index {idx}")
        counts[idx] = int(val)
    return counts
