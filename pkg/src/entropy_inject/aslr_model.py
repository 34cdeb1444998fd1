"""Brute-force cost of guessing randomized addresses.

Two attacker models: guessing without replacement (a fixed layout, each wrong
guess eliminated) and with replacement (layout re-randomized after every crash).
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from ._data import data_path
from .seeding import trial_uniforms

MAX_BITS = 64
MAX_SIMULATED_BITS = 24


class AslrError(ValueError):
    pass


class GuessModel(str, enum.Enum):
    WITHOUT_REPLACEMENT = "without_replacement"
    WITH_REPLACEMENT = "with_replacement"


@dataclass(frozen=True)
class AslrProfile:
    os_name: str
    stack_bits: int
    heap_bits: int
    library_bits: int

    def __post_init__(self):
        for name in ("stack_bits", "heap_bits", "library_bits"):
            v = getattr(self, name)
            if not (0 <= v <= MAX_BITS):
                raise AslrError(f"{name}={v} outside [0, {MAX_BITS}]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AttemptEstimate:
    bits: int
    expected_attempts: float
    model: GuessModel

    def to_dict(self) -> dict:
        return {"bits": self.bits, "expected_attempts": self.expected_attempts, "model": self.model.value}


@dataclass(frozen=True)
class MonteCarloResult:
    bits: int
    model: GuessModel
    trials: int
    mean_attempts: float
    std_error: float
    seed: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.value
        return d


def builtin_profiles() -> list[AslrProfile]:
    with open(data_path("aslr_profiles.json")) as fh:
        return [AslrProfile(**row) for row in json.load(fh)]


def profiles_to_json(profiles: list[AslrProfile]) -> str:
    return json.dumps([p.to_dict() for p in profiles], indent=2)


def profiles_from_json(text: str) -> list[AslrProfile]:
    return [AslrProfile(**row) for row in json.loads(text)]


def _check_bits(bits: int, upper: int = MAX_BITS) -> None:
    if not isinstance(bits, (int, np.integer)) or not (0 <= bits <= upper):
        raise AslrError(f"bits must be an integer in [0, {upper}], got {bits!r}")


def expected_attempts(bits: int, model: GuessModel | str = GuessModel.WITHOUT_REPLACEMENT) -> AttemptEstimate:
    _check_bits(bits)
    model = GuessModel(model)
    space = 2**bits
    if model is GuessModel.WITHOUT_REPLACEMENT:
        # (N + 1) / 2; exact as a float for N up to 2^53
        value = (space + 1) / 2
    else:
        value = float(space)
    return AttemptEstimate(bits, value, model)


def simulate_bruteforce(
    bits: int,
    trials: int,
    seed: int = 0,
    model: GuessModel | str = GuessModel.WITHOUT_REPLACEMENT,
) -> MonteCarloResult:
    """Monte Carlo estimate of the mean number of guesses to hit a hidden slot.

    Without replacement the hit position is uniform over 1..N, so a single
    uniform draw per trial suffices. With replacement the count is geometric
    with p = 1/N, drawn by inversion. Each trial's uniform depends only on
    (seed, trial index).
    """
    if bits > MAX_SIMULATED_BITS:
        raise AslrError(f"Monte Carlo limited to {MAX_SIMULATED_BITS} bits; use expected_attempts")
    _check_bits(bits, MAX_SIMULATED_BITS)
    if trials < 1:
        raise AslrError("trials must be >= 1")
    model = GuessModel(model)
    space = 2**bits
    u = trial_uniforms(seed, trials)
    if model is GuessModel.WITHOUT_REPLACEMENT:
        attempts = np.floor(u * space) + 1.0
    elif space == 1:
        attempts = np.ones(trials)
    else:
        attempts = np.ceil(np.log1p(-u) / math.log1p(-1.0 / space))
        attempts = np.maximum(attempts, 1.0)
    mean = float(attempts.mean())
    stderr = float(attempts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MonteCarloResult(bits, model, trials, mean, stderr, seed)


def attempts_curve(
    bits_min: int, bits_max: int, model: GuessModel | str = GuessModel.WITHOUT_REPLACEMENT
) -> list[tuple[int, float]]:
    _check_bits(bits_min)
    _check_bits(bits_max)
    if bits_min > bits_max:
        raise AslrError("bits_min must not exceed bits_max")
    return [(b, expected_attempts(b, model).expected_attempts) for b in range(bits_min, bits_max + 1)]


def curve_to_csv(curve: list[tuple[int, float]], model: GuessModel | str) -> str:
    model = GuessModel(model)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bits", "expected_attempts", "model"])
    for bits, value in curve:
        writer.writerow([bits, repr(value), model.value])
    return buf.getvalue()
