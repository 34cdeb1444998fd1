"""Entropy mathematics shared by every other module.

All entropies are in bits. Distributions are immutable and cheap to share.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

BYTE_ALPHABET = 256

_GAMMA_MAX_ITER = 500
_GAMMA_EPS = 1e-14
_TINY = 1e-300


class EntropyError(ValueError):
    """Base error for invalid entropy-core inputs."""


class EmptyHistogramError(EntropyError):
    pass


class SupportError(EntropyError):
    """P puts mass where Q has none and no smoothing was requested."""


class AlphabetMismatchError(EntropyError):
    pass


class DomainError(EntropyError):
    pass


@dataclass(frozen=True)
class ByteHistogram:
    counts: tuple[int, ...]
    total: int

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise EntropyError("histogram counts must be non-negative")
        if sum(self.counts) != self.total:
            raise EntropyError("histogram total does not match counts")

    @property
    def alphabet_size(self) -> int:
        return len(self.counts)

    @classmethod
    def from_counts(cls, counts: Iterable[int]) -> "ByteHistogram":
        counts = tuple(int(c) for c in counts)
        return cls(counts, sum(counts))

    def merge(self, other: "ByteHistogram") -> "ByteHistogram":
        if self.alphabet_size != other.alphabet_size:
            raise AlphabetMismatchError("cannot merge histograms over different alphabets")
        return ByteHistogram.from_counts(a + b for a, b in zip(self.counts, other.counts))


@dataclass(frozen=True)
class ProbabilityDistribution:
    probabilities: tuple[float, ...]

    def __post_init__(self):
        if not self.probabilities:
            raise EntropyError("distribution needs at least one symbol")
        for p in self.probabilities:
            if not (0.0 <= p <= 1.0):
                raise EntropyError(f"probability {p!r} outside [0, 1]")
        if abs(math.fsum(self.probabilities) - 1.0) > 1e-12:
            raise EntropyError("probabilities must sum to 1")

    @property
    def alphabet_size(self) -> int:
        return len(self.probabilities)

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> "ProbabilityDistribution":
        """Normalize non-negative weights; the result sums to 1 within 1e-12."""
        total = math.fsum(weights)
        if total <= 0:
            raise EmptyHistogramError("weights sum to zero")
        probs = [w / total for w in weights]
        # push the rounding residue onto the largest entry
        residue = 1.0 - math.fsum(probs)
        if residue:
            i = max(range(len(probs)), key=probs.__getitem__)
            probs[i] = min(1.0, max(0.0, probs[i] + residue))
        return cls(tuple(probs))

    @classmethod
    def uniform(cls, alphabet_size: int) -> "ProbabilityDistribution":
        return cls.from_weights([1.0] * alphabet_size)

    def to_json(self) -> list[float]:
        return list(self.probabilities)


@dataclass(frozen=True)
class EntropyReport:
    entropy_bits_per_symbol: float
    sample_size: int
    alphabet_size: int

    def to_dict(self) -> dict:
        return {
            "entropy_bits_per_symbol": self.entropy_bits_per_symbol,
            "sample_size": self.sample_size,
            "alphabet_size": self.alphabet_size,
        }


def build_histogram(data: bytes | bytearray | memoryview) -> ByteHistogram:
    counts = np.bincount(np.frombuffer(bytes(data), dtype=np.uint8), minlength=BYTE_ALPHABET)
    return ByteHistogram(tuple(int(c) for c in counts), len(data))


def histogram_of_stream(chunks: Iterable[bytes]) -> ByteHistogram:
    """Histogram over a stream of byte chunks without holding them all in memory."""
    counts = np.zeros(BYTE_ALPHABET, dtype=np.int64)
    for chunk in chunks:
        counts += np.bincount(np.frombuffer(chunk, dtype=np.uint8), minlength=BYTE_ALPHABET)
    return ByteHistogram.from_counts(counts.tolist())


def to_distribution(hist: ByteHistogram) -> ProbabilityDistribution:
    if hist.total == 0:
        raise EmptyHistogramError("cannot normalize an empty histogram")
    return ProbabilityDistribution.from_weights(hist.counts)


def shannon_entropy(dist: ProbabilityDistribution, sample_size: int = 0) -> EntropyReport:
    """-sum p log2 p, with zero-probability terms contributing exactly 0."""
    h = -math.fsum(p * math.log2(p) for p in dist.probabilities if p > 0.0)
    # clamp rounding excursions back into [0, log2 K]
    h = min(max(h, 0.0), math.log2(dist.alphabet_size))
    return EntropyReport(h, sample_size, dist.alphabet_size)


def entropy_of_bytes(data: bytes) -> EntropyReport:
    hist = build_histogram(data)
    if hist.total == 0:
        return EntropyReport(0.0, 0, BYTE_ALPHABET)
    return shannon_entropy(to_distribution(hist), hist.total)


def smooth(q: ProbabilityDistribution, smoothing: float) -> ProbabilityDistribution:
    """Add ``smoothing`` to every probability and renormalize."""
    if smoothing < 0:
        raise DomainError("smoothing must be non-negative")
    if smoothing == 0:
        return q
    return ProbabilityDistribution.from_weights([p + smoothing for p in q.probabilities])


def relative_entropy(
    p: ProbabilityDistribution, q: ProbabilityDistribution, smoothing: float = 0.0
) -> float:
    """D(p || q') in bits, where q' is q after additive smoothing.

    Raises SupportError when smoothing is 0 and p has mass outside supp(q).
    """
    if p.alphabet_size != q.alphabet_size:
        raise AlphabetMismatchError(
            f"alphabet sizes differ: {p.alphabet_size} vs {q.alphabet_size}"
        )
    qs = smooth(q, smoothing)
    terms = []
    for pi, qi in zip(p.probabilities, qs.probabilities):
        if pi == 0.0:
            continue
        if qi == 0.0:
            raise SupportError("p(i) > 0 where q(i) = 0; use smoothing > 0")
        terms.append(pi * math.log2(pi / qi))
    return math.fsum(terms)


def regularized_lower_incomplete_gamma(s: float, x: float) -> float:
    """P(s, x) = gamma(s, x) / Gamma(s).

    Power series below x = s + 1, Lentz continued fraction for the upper
    tail above it.
    """
    return _incomplete_gamma(s, x)[0]


def regularized_upper_incomplete_gamma(s: float, x: float) -> float:
    """Q(s, x) = 1 - P(s, x), computed directly in the tail to keep precision."""
    return _incomplete_gamma(s, x)[1]


def _incomplete_gamma(s: float, x: float) -> tuple[float, float]:
    if not s > 0:
        raise DomainError(f"shape must be positive, got {s}")
    if not x >= 0:
        raise DomainError(f"x must be non-negative, got {x}")
    if x == 0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    log_prefactor = -x + s * math.log(x) - math.lgamma(s)
    if x < s + 1.0:
        p = min(1.0, _gamma_series(s, x) * math.exp(log_prefactor))
        return p, 1.0 - p
    q = min(1.0, _gamma_continued_fraction(s, x) * math.exp(log_prefactor))
    return 1.0 - q, q


def _gamma_series(s: float, x: float) -> float:
    term = 1.0 / s
    total = term
    denom = s
    for _ in range(_GAMMA_MAX_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            return total
    raise ArithmeticError(f"incomplete gamma series did not converge for s={s}, x={x}")


def _gamma_continued_fraction(s: float, x: float) -> float:
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAX_ITER + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            return h
    raise ArithmeticError(f"incomplete gamma fraction did not converge for s={s}, x={x}")


def chi_squared_p_value(statistic: float, dof: int) -> float:
    """Upper-tail probability of a chi-squared variate with ``dof`` degrees of freedom."""
    if dof < 1:
        raise DomainError("dof must be >= 1")
    if statistic < 0:
        raise DomainError("chi-squared statistic must be non-negative")
    if statistic == 0:
        return 1.0
    return regularized_upper_incomplete_gamma(dof / 2.0, statistic / 2.0)


def chi_squared_uniform_statistic(hist: ByteHistogram) -> float:
    """Pearson statistic of a histogram against the uniform expectation."""
    expected = hist.total / hist.alphabet_size
    if expected == 0:
        raise EmptyHistogramError("chi-squared needs a non-empty histogram")
    return math.fsum((c - expected) ** 2 for c in hist.counts) / expected
