"""Hybrid entropy-mixing generator, a deliberately weak baseline, and a small
statistical battery (chi-squared + byte entropy).

Timing is simulated by default: every generator charges a fixed cost per
output byte, per injection and per source byte, so generation-time factors are
reproducible. Pass ``wall_clock=True`` to :func:`benchmark_generators` for real
measurements.
"""

from __future__ import annotations

import enum
import hashlib
import os
import time
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .entropy_core import (
    build_histogram,
    chi_squared_p_value,
    chi_squared_uniform_statistic,
    shannon_entropy,
    to_distribution,
)
from .seeding import GOLDEN, MASK64, derive_seed, splitmix64, splitmix64_array

MIN_SAMPLE_BYTES = 4096

# simulated cost model, nanoseconds
PRNG_BYTE_NS = 1.0
MIX_BYTE_NS = 0.1
INJECTION_NS = 8.0
DEFAULT_SOURCE_BYTE_NS = 4

_LCG_MUL = 6364136223846793005
_LCG_INC = 1442695040888963407
_LCG_BLOCK = 4096


class GeneratorKind(str, enum.Enum):
    WEAK_BASELINE = "weak_baseline"
    EMN_LOW = "emn_low"
    EMN_HIGH = "emn_high"
    PHYSICAL_ONLY = "physical_only"


TABLE_ORDER = (
    GeneratorKind.WEAK_BASELINE,
    GeneratorKind.EMN_LOW,
    GeneratorKind.EMN_HIGH,
    GeneratorKind.PHYSICAL_ONLY,
)


class RandomnessError(ValueError):
    pass


class SampleTooSmallError(RandomnessError):
    pass


@dataclass(frozen=True)
class EntropySourceSpec:
    mode: str = "seeded_pseudo_physical"
    seed: int = 0
    per_byte_cost_ns: int = DEFAULT_SOURCE_BYTE_NS

    def __post_init__(self):
        if self.mode not in ("system_jitter", "seeded_pseudo_physical"):
            raise RandomnessError(f"unknown entropy source mode {self.mode!r}")
        if self.per_byte_cost_ns < 0:
            raise RandomnessError("per_byte_cost_ns must be >= 0")


@dataclass(frozen=True)
class EmnConfig:
    injection_interval_bytes: int
    injection_size_bytes: int = 16
    source: EntropySourceSpec = field(default_factory=EntropySourceSpec)
    # cycle length of the pool's keystream between injections
    core_period_bytes: int = 1024

    def __post_init__(self):
        if self.injection_interval_bytes <= 0 or self.injection_size_bytes <= 0:
            raise RandomnessError("injection interval and size must be positive")
        if self.injection_interval_bytes < self.injection_size_bytes:
            raise RandomnessError("injection_interval_bytes must be >= injection_size_bytes")
        if self.core_period_bytes <= 0 or self.core_period_bytes % 8:
            raise RandomnessError("core_period_bytes must be a positive multiple of 8")


@dataclass
class RandomnessReport:
    generator: str
    chi_squared_p_value: float
    entropy_bits_per_byte: float
    sample_size_bytes: int
    chi_squared_statistic: float
    generation_time_factor: float | None = None

    def to_dict(self) -> dict:
        return {
            "generator": self.generator,
            "chi_squared_p_value": self.chi_squared_p_value,
            "entropy_bits_per_byte": self.entropy_bits_per_byte,
            "generation_time_factor": self.generation_time_factor,
            "sample_size_bytes": self.sample_size_bytes,
        }


class EntropySource:
    """Stand-in for a physical noise source.

    Seeded mode is a BLAKE2b counter stream (deterministic); system_jitter
    hashes OS randomness with timer jitter and is not reproducible.
    """

    def __init__(self, spec: EntropySourceSpec):
        self.spec = spec
        self.bytes_read = 0
        self._counter = 0
        self._buf = b""
        self._key = spec.seed.to_bytes(8, "little")

    @property
    def simulated_cost_ns(self) -> float:
        return float(self.bytes_read * self.spec.per_byte_cost_ns)

    def read(self, n: int) -> bytes:
        while len(self._buf) < n:
            self._buf += self._next_chunk(max(64, n - len(self._buf)))
        out, self._buf = self._buf[:n], self._buf[n:]
        self.bytes_read += n
        return out

    def _next_chunk(self, n: int) -> bytes:
        if self.spec.mode == "system_jitter":
            jitter = time.perf_counter_ns().to_bytes(8, "little")
            return hashlib.blake2b(os.urandom(n) + jitter, digest_size=64).digest() + os.urandom(n)
        # 64-byte blocks: BLAKE2b(key=seed, counter)
        nblocks = -(-n // 64)
        parts = []
        for _ in range(nblocks):
            parts.append(
                hashlib.blake2b(
                    self._counter.to_bytes(8, "little"), key=self._key, digest_size=64
                ).digest()
            )
            self._counter += 1
        return b"".join(parts)


class RandomGenerator:
    """Common surface: ``next_block``, byte accounting and simulated cost."""

    kind: GeneratorKind

    def __init__(self):
        self.bytes_drawn = 0

    def next_block(self, n: int) -> bytes:
        if n < 0:
            raise RandomnessError("n must be >= 0")
        if n == 0:
            return b""
        out = self._generate(n)
        self.bytes_drawn += n
        return out

    def _generate(self, n: int) -> bytes:
        raise NotImplementedError

    @property
    def simulated_cost_ns(self) -> float:
        raise NotImplementedError


def _lcg_jump_tables(size: int) -> tuple[np.ndarray, np.ndarray]:
    """(A[k], C[k]) with x_{n+k} = A[k] x_n + C[k] mod 2^64, k = 1..size."""
    a = np.empty(size, dtype=np.uint64)
    c = np.empty(size, dtype=np.uint64)
    ak, ck = 1, 0
    for k in range(size):
        ak = (ak * _LCG_MUL) & MASK64
        ck = (ck * _LCG_MUL + _LCG_INC) & MASK64
        a[k] = ak
        c[k] = ck
    return a, c


_JUMP_A, _JUMP_C = _lcg_jump_tables(_LCG_BLOCK)


class WeakBaselineGenerator(RandomGenerator):
    """Truncated 64-bit LCG; each byte is the top state byte OR'd with the next
    nibble, which sets each of the four low bits with probability 3/4.

    Lands near 7.25 bits/byte, about the quality of the "standard PRNG" row.
    """

    kind = GeneratorKind.WEAK_BASELINE

    def __init__(self, seed: int):
        super().__init__()
        self._state = splitmix64(seed & MASK64)

    def _generate(self, n: int) -> bytes:
        out = np.empty(n, dtype=np.uint8)
        pos = 0
        x = np.uint64(self._state)
        with np.errstate(over="ignore"):
            while pos < n:
                k = min(_LCG_BLOCK, n - pos)
                states = _JUMP_A[:k] * x + _JUMP_C[:k]
                hi = states >> np.uint64(56)
                nibble = (states >> np.uint64(48)) & np.uint64(0x0F)
                out[pos : pos + k] = (hi | nibble).astype(np.uint8)
                x = states[k - 1]
                pos += k
        self._state = int(x)
        return out.tobytes()

    @property
    def simulated_cost_ns(self) -> float:
        return self.bytes_drawn * PRNG_BYTE_NS


class EmnGenerator(RandomGenerator):
    """Entropy mixing network over a 256-bit pool.

    Output word j of the current epoch is an avalanche permutation of two pool
    words and j. The keystream cycles every ``core_period_bytes`` until the
    next injection re-keys the pool, so injection frequency controls quality.
    """

    def __init__(self, seed: int, config: EmnConfig, kind: GeneratorKind = GeneratorKind.EMN_HIGH):
        super().__init__()
        self.kind = kind
        self.config = config
        self.source = EntropySource(config.source)
        self.pool = np.array([derive_seed(seed, 0, i) for i in range(4)], dtype=np.uint64)
        self.injections = 0
        self._epoch_pos = 0

    def mix_entropy(self, material: bytes) -> None:
        """XOR-fold ``material`` into the pool, then two avalanche rounds."""
        if not material:
            raise RandomnessError("mix_entropy needs non-empty material")
        padded = bytes(material) + b"\x00" * (-len(material) % 8)
        pool = [int(w) for w in self.pool]
        for i in range(0, len(padded), 8):
            pool[(i // 8) % 4] ^= int.from_bytes(padded[i : i + 8], "little")
        # length tag keeps b"\x01" and b"\x01\x00" distinct
        pool[3] ^= len(material)
        for rnd in range(2):
            for i in range(4):
                prev = pool[(i + 3) % 4]
                rotated = ((prev << 23) | (prev >> 41)) & MASK64
                pool[i] = splitmix64(pool[i] ^ rotated ^ (rnd * 4 + i))
        self.pool = np.array(pool, dtype=np.uint64)
        self._epoch_pos = 0

    def _keystream_words(self, start: int, stop: int) -> np.ndarray:
        period_words = self.config.core_period_bytes // 8
        j = np.arange(start, stop, dtype=np.uint64) % np.uint64(period_words)
        a = self.pool[(j & np.uint64(3)).astype(np.intp)]
        b = self.pool[((j + np.uint64(1)) & np.uint64(3)).astype(np.intp)]
        with np.errstate(over="ignore"):
            inner = splitmix64_array(b + j * np.uint64(GOLDEN))
            return splitmix64_array(a ^ inner)

    def _epoch_bytes(self, start: int, stop: int) -> bytes:
        w0, w1 = start // 8, -(-stop // 8)
        raw = self._keystream_words(w0, w1).astype("<u8").tobytes()
        return raw[start - 8 * w0 : stop - 8 * w0]

    def _generate(self, n: int) -> bytes:
        interval = self.config.injection_interval_bytes
        parts = []
        remaining = n
        while remaining:
            take = min(remaining, interval - self._epoch_pos)
            parts.append(self._epoch_bytes(self._epoch_pos, self._epoch_pos + take))
            self._epoch_pos += take
            remaining -= take
            if self._epoch_pos == interval:
                self.mix_entropy(self.source.read(self.config.injection_size_bytes))
                self.injections += 1
        return b"".join(parts)

    @property
    def simulated_cost_ns(self) -> float:
        return (
            self.bytes_drawn * (PRNG_BYTE_NS + MIX_BYTE_NS)
            + self.injections * INJECTION_NS
            + self.source.simulated_cost_ns
        )


class PhysicalOnlyGenerator(RandomGenerator):
    """Every output byte comes straight from the entropy source."""

    kind = GeneratorKind.PHYSICAL_ONLY

    def __init__(self, seed: int, source: EntropySourceSpec | None = None):
        super().__init__()
        self.source = EntropySource(source or EntropySourceSpec(seed=derive_seed(seed, 2)))

    def _generate(self, n: int) -> bytes:
        return self.source.read(n)

    @property
    def simulated_cost_ns(self) -> float:
        return self.source.simulated_cost_ns


def make_generator(kind: GeneratorKind | str, seed: int, source_mode: str = "seeded_pseudo_physical") -> RandomGenerator:
    kind = GeneratorKind(kind)
    if kind is GeneratorKind.WEAK_BASELINE:
        return WeakBaselineGenerator(seed)
    if kind is GeneratorKind.PHYSICAL_ONLY:
        return PhysicalOnlyGenerator(seed, EntropySourceSpec(source_mode, derive_seed(seed, 2)))
    interval = 4096 if kind is GeneratorKind.EMN_LOW else 256
    config = EmnConfig(interval, 16, EntropySourceSpec(source_mode, derive_seed(seed, 1)))
    return EmnGenerator(seed, config, kind)


def run_test_battery(sample: bytes, generator: str = "sample") -> RandomnessReport:
    if len(sample) < MIN_SAMPLE_BYTES:
        raise SampleTooSmallError(
            f"test battery needs at least {MIN_SAMPLE_BYTES} bytes, got {len(sample)}"
        )
    hist = build_histogram(sample)
    stat = chi_squared_uniform_statistic(hist)
    return RandomnessReport(
        generator=generator,
        chi_squared_p_value=chi_squared_p_value(stat, 255),
        entropy_bits_per_byte=shannon_entropy(to_distribution(hist), hist.total).entropy_bits_per_symbol,
        sample_size_bytes=len(sample),
        chi_squared_statistic=stat,
    )


def _weak_reference_cost(n: int) -> float:
    return n * PRNG_BYTE_NS


def benchmark_generators(
    kinds: Sequence[GeneratorKind | str],
    n: int,
    seed: int = 0,
    wall_clock: bool = False,
) -> list[RandomnessReport]:
    """Draw ``n`` bytes from each generator and report quality plus time factor.

    Factors are relative to weak_baseline drawing the same ``n`` bytes.
    """
    reports = []
    weak_wall = None
    if wall_clock:
        t0 = time.perf_counter()
        make_generator(GeneratorKind.WEAK_BASELINE, seed).next_block(n)
        weak_wall = time.perf_counter() - t0
    for kind in kinds:
        gen = make_generator(kind, seed)
        t0 = time.perf_counter()
        sample = gen.next_block(n)
        elapsed = time.perf_counter() - t0
        report = run_test_battery(sample, GeneratorKind(kind).value)
        if wall_clock:
            report.generation_time_factor = elapsed / weak_wall
        else:
            report.generation_time_factor = gen.simulated_cost_ns / _weak_reference_cost(n)
        reports.append(report)
    return reports
