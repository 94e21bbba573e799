"""Text-corpus ingestion: tokenization, unigram/bigram statistics,
conditional next-word distributions, contiguous-window sampling, and ball
radii derived from embedding cosine similarity."""

from __future__ import annotations

import csv
import string
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import Distribution, InputError, PartitionSideInfo
from .sim import rng_from_seed


def tokenize(text: str, case_fold: bool = True,
             strip_punctuation: bool = True) -> list[str]:
    """Whitespace tokenization with optional lowercasing and stripping of
    leading/trailing ASCII punctuation. Deterministic."""
    if case_fold:
        text = text.lower()
    tokens = []
    for raw in text.split():
        token = raw.strip(string.punctuation) if strip_punctuation else raw
        if token:
            tokens.append(token)
    return tokens


def read_corpus(path: str, case_fold: bool = True,
                strip_punctuation: bool = True) -> list[str]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not valid UTF-8: {exc}") from exc
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return tokenize(text, case_fold=case_fold, strip_punctuation=strip_punctuation)


@dataclass(frozen=True, eq=False)
class Lexicon:
    """Bijective token-to-index map with dense indices 0..d-1."""

    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.tokens:
            raise InputError("lexicon must be nonempty")
        index = {token: i for i, token in enumerate(self.tokens)}
        if len(index) != len(self.tokens):
            raise InputError("lexicon tokens must be distinct")
        object.__setattr__(self, "_index", MappingProxyType(index))

    @property
    def index(self) -> Mapping[str, int]:
        return self._index  # type: ignore[attr-defined]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Lexicon":
        """Lexicon over the distinct tokens, sorted for determinism."""
        return cls(tuple(sorted(set(tokens))))

    def union(self, other: "Lexicon") -> "Lexicon":
        return Lexicon.from_tokens(self.tokens + other.tokens)

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        out = np.empty(len(tokens), dtype=np.int64)
        for k, token in enumerate(tokens):
            try:
                out[k] = self.index[token]
            except KeyError:
                raise InputError(f"token {token!r} not in lexicon") from None
        return out


@dataclass(frozen=True, eq=False)
class BigramTable:
    """Successor counts for one context token."""

    context: str
    counts: Mapping[str, int]
    total: int

    def __post_init__(self) -> None:
        if self.total != sum(self.counts.values()):
            raise InputError("bigram total does not match the counts")
        if any(c < 1 for c in self.counts.values()):
            raise InputError("stored bigram counts must be positive")


def bigram_table(tokens: Sequence[str], context: str) -> BigramTable:
    counts: dict[str, int] = {}
    for here, after in zip(tokens, tokens[1:]):
        if here == context:
            counts[after] = counts.get(after, 0) + 1
    if not counts:
        raise InputError(f"context {context!r} is never followed by a token")
    return BigramTable(context=context,
                       counts=MappingProxyType(counts),
                       total=sum(counts.values()))


def _distribution_from_counts(counts: Mapping[str, int],
                              lexicon: Lexicon | None) -> tuple[Distribution, Lexicon]:
    if lexicon is None:
        lexicon = Lexicon.from_tokens(counts.keys())
    probs = np.zeros(len(lexicon))
    total = sum(counts.values())
    for token, count in counts.items():
        if token not in lexicon:
            raise InputError(f"token {token!r} missing from the supplied lexicon")
        probs[lexicon.index[token]] = count / total
    return Distribution(probs), lexicon


def conditional_distribution(tokens: Sequence[str], context: str,
                             lexicon: Lexicon | None = None) -> tuple[Distribution, Lexicon]:
    """Empirical next-token distribution after ``context``.

    With ``lexicon`` supplied, the distribution lives on it (zero-padded);
    otherwise the lexicon of observed successors is built and returned.
    """
    table = bigram_table(tokens, context)
    return _distribution_from_counts(table.counts, lexicon)


def pooled_conditional_distribution(tokens: Sequence[str], contexts: Sequence[str],
                                    lexicon: Lexicon | None = None
                                    ) -> tuple[Distribution, Lexicon]:
    """Next-token distribution with successor counts pooled over several
    context words."""
    if not contexts:
        raise InputError("need at least one context word")
    pooled: dict[str, int] = {}
    for context in contexts:
        for token, count in bigram_table(tokens, context).counts.items():
            pooled[token] = pooled.get(token, 0) + count
    return _distribution_from_counts(pooled, lexicon)


def unigram_distribution(tokens: Sequence[str],
                         lexicon: Lexicon | None = None) -> tuple[Distribution, Lexicon]:
    """Empirical token distribution of the corpus."""
    if not tokens:
        raise InputError("empty token sequence")
    counts: dict[str, int] = {}
    for token in tokens:
        counts[token] = counts.get(token, 0) + 1
    return _distribution_from_counts(counts, lexicon)


def contiguous_window(tokens: Sequence[str], context: str, occurrences: int,
                      seed: int) -> list[str]:
    """A contiguous slice of the corpus containing exactly ``occurrences``
    occurrences of ``context``, starting at a uniformly chosen occurrence.

    The window runs from the chosen occurrence up to (but excluding) the next
    occurrence after the covered block, so a recount of the context inside
    the window gives exactly ``occurrences``.
    """
    if occurrences < 1:
        raise InputError("need at least one occurrence")
    positions = [i for i, token in enumerate(tokens) if token == context]
    if len(positions) < occurrences:
        raise InputError(
            f"context {context!r} occurs {len(positions)} times, "
            f"need {occurrences}"
        )
    rng = rng_from_seed(seed)
    k = int(rng.integers(0, len(positions) - occurrences + 1))
    start = positions[k]
    if k + occurrences < len(positions):
        end = positions[k + occurrences]
    else:
        end = len(tokens)
    return list(tokens[start:end])


def token_window(tokens: Sequence[str], length: int, seed: int) -> list[str]:
    """A uniformly placed contiguous slice of ``length`` tokens."""
    if length < 1:
        raise InputError("window length must be positive")
    if length > len(tokens):
        raise InputError(f"window of {length} tokens exceeds corpus of {len(tokens)}")
    rng = rng_from_seed(seed)
    start = int(rng.integers(0, len(tokens) - length + 1))
    return list(tokens[start:start + length])


def successor_samples(window: Sequence[str], context: str,
                      lexicon: Lexicon) -> np.ndarray:
    """Symbols following each in-window occurrence of ``context`` that has an
    in-window successor, encoded against ``lexicon``."""
    successors = [after for here, after in zip(window, window[1:]) if here == context]
    return lexicon.encode(successors)


# ---------------------------------------------------------------------------
# Embeddings
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """Token vectors of a fixed dimension."""

    dim: int
    vectors: Mapping[str, np.ndarray]

    def __post_init__(self) -> None:
        for token, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise InputError(f"vector for {token!r} has dimension {vec.shape}")
            if not np.all(np.isfinite(vec)):
                raise InputError(f"vector for {token!r} has non-finite entries")


def read_embeddings(path: str) -> EmbeddingSet:
    """Read text-format embeddings: a `vocab dim` header line, then one
    `token v1 ... vdim` line per word."""
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    vectors: dict[str, np.ndarray] = {}
    with handle:
        try:
            header = handle.readline().split()
            if len(header) != 2:
                raise InputError(f"{path}:1: expected `vocab dim` header")
            try:
                vocab, dim = int(header[0]), int(header[1])
            except ValueError:
                raise InputError(f"{path}:1: expected `vocab dim` header") from None
            for lineno, line in enumerate(handle, start=2):
                parts = line.split()
                if not parts:
                    continue
                token = parts[0]
                if len(parts) != dim + 1:
                    raise InputError(
                        f"{path}:{lineno}: expected {dim} values for {token!r}, "
                        f"got {len(parts) - 1}"
                    )
                if token in vectors:
                    raise InputError(f"{path}:{lineno}: duplicate token {token!r}")
                try:
                    vec = np.array([float(x) for x in parts[1:]])
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: {exc}") from exc
                vec.setflags(write=False)
                vectors[token] = vec
        except UnicodeDecodeError as exc:
            raise InputError(f"{path}: not valid UTF-8: {exc}") from exc
    if len(vectors) != vocab:
        raise InputError(f"{path}: header promises {vocab} tokens, found {len(vectors)}")
    return EmbeddingSet(dim=dim, vectors=MappingProxyType(vectors))


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise InputError("cosine similarity undefined for a zero vector")
    return float(u @ v) / (nu * nv)


# Radii must stay strictly positive for BallSideInfo.
MIN_DELTA = 1e-6


def delta_from_embeddings(emb: EmbeddingSet, w1: str, w2: str) -> float:
    """Ball radius 1 - max(0, cos(v1, v2)), clamped to [1e-6, 1].

    Identical words give the floor 1e-6; orthogonal or opposed vectors give 1.
    """
    for token in (w1, w2):
        if token not in emb.vectors:
            raise InputError(f"token {token!r} has no embedding")
    similarity = cosine_similarity(emb.vectors[w1], emb.vectors[w2])
    return max(MIN_DELTA, 1.0 - max(0.0, similarity))


def threshold_partition(dist: Distribution, threshold: float) -> PartitionSideInfo:
    """Partition with low side {i : p_i <= threshold}; boundary ties go low.

    Raises if either side would be empty.
    """
    low = np.flatnonzero(dist.probs <= threshold)
    if low.size == 0 or low.size == dist.d:
        raise InputError(
            f"threshold {threshold!r} leaves an empty partition side "
            f"(probabilities span [{dist.probs.min()!r}, {dist.probs.max()!r}])"
        )
    return PartitionSideInfo.from_low_set(low, dist.d)


# ---------------------------------------------------------------------------
# Lexicon CSV
# ---------------------------------------------------------------------------


def write_lexicon_csv(lexicon: Lexicon, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["index", "token"])
        for i, token in enumerate(lexicon.tokens):
            writer.writerow([i, token])


def read_lexicon_csv(path: str) -> Lexicon:
    rows: dict[int, str] = {}
    try:
        handle = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if lineno == 1 and row[0].strip() == "index":
                continue
            if len(row) != 2:
                raise InputError(f"{path}:{lineno}: expected 2 fields")
            try:
                rows[int(row[0])] = row[1]
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
    if sorted(rows) != list(range(len(rows))):
        raise InputError(f"{path}: indices must cover 0..{len(rows) - 1}")
    return Lexicon(tuple(rows[i] for i in range(len(rows))))
