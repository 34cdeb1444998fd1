"""Seeded discrete-event simulation of reconnaissance against a moving target.

Each trial is one attack campaign. The attacker learns the randomized
dimensions one at a time (gamma-distributed recon time, mean ``recon_cost_s``),
then needs ``exploit_window_s`` of stable configuration to land the exploit.
The defender re-randomizes every dimension at each reconfiguration; a
dimension keeps its value with probability 1/cardinality, so low-entropy
dimensions make reconfigurations partly useless. A reconfiguration that
changes something the attacker relies on invalidates that knowledge (and
aborts an exploit in flight, costing ``restart_penalty_s``).
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, replace

import jsonschema

from ._data import data_path
from .seeding import derive_seed

BASELINE_LATENCY_MS = 100.0
INF = math.inf

TABLE_II_PRESETS = ("ip_hopping", "port_randomization", "protocol_diversification", "multi_dimensional")
PRESET_NAMES = TABLE_II_PRESETS + ("cpmtd_power",)
REFERENCE_SWEEP_PERIODS = (240.0, 120.0, 60.0, 30.0, 15.0, 7.5)


class MtdError(ValueError):
    pass


class ScenarioValidationError(MtdError):
    pass


class UnknownPresetError(MtdError):
    pass


@dataclass(frozen=True)
class MtdDimension:
    name: str
    cardinality: int
    recon_cost_s: float
    change_latency_ms: float = 0.0
    change_throughput_frac: float = 0.0
    # percent latency added per reconfiguration-per-second
    latency_disruption: float = 0.0
    # percent throughput lost (multiplicatively) per reconfiguration-per-second
    throughput_disruption: float = 0.0

    def __post_init__(self):
        if self.cardinality < 2:
            raise MtdError(f"dimension {self.name!r}: cardinality must be >= 2")
        if not self.recon_cost_s > 0:
            raise MtdError(f"dimension {self.name!r}: recon_cost_s must be > 0")
        if self.change_latency_ms < 0 or self.latency_disruption < 0 or self.throughput_disruption < 0:
            raise MtdError(f"dimension {self.name!r}: overhead coefficients must be >= 0")
        if not (0.0 <= self.change_throughput_frac < 1.0):
            raise MtdError(f"dimension {self.name!r}: change_throughput_frac must be in [0, 1)")


@dataclass(frozen=True)
class MtdStrategy:
    dimensions: tuple[MtdDimension, ...]
    reconfig_period_s: float = INF
    policy: str = "uniform_rerandomize"
    schedule: str = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "dimensions", tuple(self.dimensions))
        if not self.dimensions:
            raise MtdError("strategy needs at least one dimension")
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise MtdError(f"duplicate dimension names in {names}")
        if not self.reconfig_period_s > 0:
            raise MtdError("reconfig_period_s must be > 0 (use inf for static)")
        if self.policy != "uniform_rerandomize":
            raise MtdError(f"unsupported policy {self.policy!r}")
        if self.schedule not in ("periodic", "poisson"):
            raise MtdError(f"unknown schedule {self.schedule!r}")

    @property
    def is_static(self) -> bool:
        return math.isinf(self.reconfig_period_s)

    def static_twin(self) -> "MtdStrategy":
        return replace(self, reconfig_period_s=INF)

    def with_period(self, period_s: float) -> "MtdStrategy":
        return replace(self, reconfig_period_s=period_s)


@dataclass(frozen=True)
class AttackerModel:
    exploit_window_s: float
    max_campaign_s: float
    restart_penalty_s: float = 0.0
    # gamma shape of each recon step; larger means less luck involved
    recon_shape: float = 4.0

    def __post_init__(self):
        if not (self.exploit_window_s > 0 and self.max_campaign_s > 0 and self.recon_shape > 0):
            raise MtdError("exploit_window_s, max_campaign_s and recon_shape must be > 0")
        if self.restart_penalty_s < 0:
            raise MtdError("restart_penalty_s must be >= 0")


@dataclass(frozen=True)
class SimResult:
    attack_success_rate: float
    success_std_error: float
    mean_time_to_compromise_s: float
    latency_overhead_pct: float
    throughput_reduction_pct: float
    config_entropy_bits: float
    trials: int
    seed: int

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["mean_time_to_compromise_s"]):
            d["mean_time_to_compromise_s"] = None
        return d


@dataclass(frozen=True)
class Preset:
    name: str
    scenarios: dict  # tag -> (MtdStrategy, AttackerModel)

    @property
    def strategy(self) -> MtdStrategy:
        return self._single()[0]

    @property
    def attacker(self) -> AttackerModel:
        return self._single()[1]

    def _single(self):
        if len(self.scenarios) != 1:
            raise MtdError(f"preset {self.name!r} has sub-scenarios {sorted(self.scenarios)}")
        return next(iter(self.scenarios.values()))


def config_entropy(strategy: MtdStrategy) -> float:
    """Entropy in bits of the uniform joint configuration: sum of log2(cardinality)."""
    return math.fsum(math.log2(d.cardinality) for d in strategy.dimensions)


def overhead(strategy: MtdStrategy) -> tuple[float, float]:
    """(latency_overhead_pct, throughput_reduction_pct); zero for a static strategy."""
    if strategy.is_static:
        return 0.0, 0.0
    freq = 1.0 / strategy.reconfig_period_s
    latency = 0.0
    retained = 1.0
    for d in strategy.dimensions:
        latency += 100.0 * d.change_latency_ms / BASELINE_LATENCY_MS + d.latency_disruption * freq
        retained *= (1.0 - d.change_throughput_frac) * math.exp(-d.throughput_disruption * freq / 100.0)
    return latency, 100.0 * (1.0 - retained)


class _Schedule:
    """Reconfiguration times for one trial, with a skip to the next *relevant* change."""

    def __init__(self, strategy: MtdStrategy, rng: random.Random):
        self.period = strategy.reconfig_period_s
        self.poisson = strategy.schedule == "poisson"
        self.rng = rng
        self.phase = 0.0 if (self.poisson or strategy.is_static) else rng.random() * self.period

    def next_relevant(self, t: float, keep_prob: float) -> float:
        """Time of the first reconfiguration after ``t`` that changes at least one
        relevant dimension; ``keep_prob`` is the chance a reconfiguration leaves
        all of them unchanged."""
        if math.isinf(self.period):
            return INF
        change_prob = 1.0 - keep_prob
        if self.poisson:
            return t + self.rng.expovariate(change_prob / self.period)
        if t < self.phase:
            k = 0
        else:
            k = math.floor((t - self.phase) / self.period) + 1
        if self.phase + k * self.period <= t:
            k += 1
        if keep_prob > 0.0:
            u = self.rng.random()
            k += math.floor(math.log1p(-u) / math.log(keep_prob))
        return self.phase + k * self.period


def _run_trial(
    strategy: MtdStrategy, attacker: AttackerModel, horizon: float, rng: random.Random
) -> float | None:
    """Time of compromise, or None if the campaign runs out of budget."""
    dims = strategy.dimensions
    n = len(dims)
    keep = [1.0 / d.cardinality for d in dims]
    schedule = _Schedule(strategy, rng)
    learned = [False] * n
    shape = attacker.recon_shape
    t = 0.0
    task = -1
    task_end = 0.0
    while True:
        if task < 0:
            task = next((i for i in range(n) if not learned[i]), n)
            if task < n:
                task_end = t + rng.gammavariate(shape, dims[task].recon_cost_s / shape)
            else:
                task_end = t + attacker.exploit_window_s
        if task_end > horizon:
            return None
        relevant = [i for i in range(n) if learned[i] or i == task]
        keep_prob = math.prod(keep[i] for i in relevant)
        t_change = schedule.next_relevant(t, keep_prob)
        if t_change > task_end:
            t = task_end
            if task == n:
                return t
            learned[task] = True
            task = -1
            continue
        # ties go to the defender: a change exactly at task_end still interrupts
        while True:
            changed = [i for i in relevant if rng.random() >= keep[i]]
            if changed:
                break
        for i in changed:
            learned[i] = False
        t = t_change
        if task == n:
            t += attacker.restart_penalty_s
            task = -1
        elif task in changed:
            task = -1


def run_simulation(
    strategy: MtdStrategy,
    attacker: AttackerModel,
    duration_s: float | None = None,
    trials: int = 1000,
    seed: int = 0,
) -> SimResult:
    """Monte Carlo over independent campaigns; trial i uses seed derive_seed(seed, i)."""
    if trials < 1:
        raise MtdError("trials must be >= 1")
    horizon = attacker.max_campaign_s if duration_s is None else min(duration_s, attacker.max_campaign_s)
    times = []
    for i in range(trials):
        outcome = _run_trial(strategy, attacker, horizon, random.Random(derive_seed(seed, i)))
        if outcome is not None:
            times.append(outcome)
    rate = len(times) / trials
    latency, throughput = overhead(strategy)
    return SimResult(
        attack_success_rate=rate,
        success_std_error=math.sqrt(rate * (1.0 - rate) / trials),
        mean_time_to_compromise_s=math.fsum(times) / len(times) if times else INF,
        latency_overhead_pct=latency,
        throughput_reduction_pct=throughput,
        config_entropy_bits=config_entropy(strategy),
        trials=trials,
        seed=seed,
    )


def frequency_sweep(
    strategy: MtdStrategy,
    attacker: AttackerModel,
    periods: Sequence[float],
    trials: int = 1000,
    seed: int = 0,
    duration_s: float | None = None,
) -> list[tuple[float, SimResult]]:
    """One run per period, all with the same seed so points are paired."""
    if not periods:
        raise MtdError("periods must be non-empty")
    if any(not p > 0 for p in periods):
        raise MtdError("periods must be positive")
    return [
        (p, run_simulation(strategy.with_period(p), attacker, duration_s, trials, seed)) for p in periods
    ]


def attack_reduction_pct(dynamic_rate: float, static_rate: float) -> float:
    if static_rate <= 0.0:
        return 0.0
    return 100.0 * (1.0 - dynamic_rate / static_rate)


# ---------------------------------------------------------------- presets


def _load_preset_fixture() -> dict:
    with open(data_path("mtd_presets.json")) as fh:
        return json.load(fh)


def _build(fixture: dict, spec: dict, attacker: AttackerModel) -> tuple[MtdStrategy, AttackerModel]:
    dims = tuple(MtdDimension(name=n, **fixture["dimensions"][n]) for n in spec["dimensions"])
    return MtdStrategy(dims, float(spec["reconfig_period_s"])), attacker


def preset(name: str) -> Preset:
    fixture = _load_preset_fixture()
    if name not in fixture["presets"]:
        raise UnknownPresetError(f"unknown preset {name!r}; choose from {sorted(fixture['presets'])}")
    spec = fixture["presets"][name]
    attacker = AttackerModel(**fixture["attackers"][spec["attacker"]])
    if "sub_scenarios" in spec:
        scenarios = {tag: _build(fixture, sub, attacker) for tag, sub in spec["sub_scenarios"].items()}
    else:
        scenarios = {name: _build(fixture, spec, attacker)}
    return Preset(name, scenarios)


def reference_sweep_scenario() -> tuple[MtdStrategy, AttackerModel]:
    """Strategy and attacker used for the reconfiguration-frequency sweep."""
    fixture = _load_preset_fixture()
    return preset(fixture["reference_sweep"]["preset"]).scenarios[fixture["reference_sweep"]["preset"]]


@dataclass
class ComparisonRow:
    preset: str
    scenario: str
    attack_success_rate: float
    static_success_rate: float
    attack_reduction_pct: float
    latency_overhead_pct: float
    throughput_reduction_pct: float
    config_entropy_bits: float
    success_std_error: float = 0.0
    reduction_baseline: str = field(default="static twin, same attacker and seed")

    def to_dict(self) -> dict:
        return asdict(self)


def compare_scenario(
    name: str, tag: str, strategy: MtdStrategy, attacker: AttackerModel, trials: int, seed: int
) -> ComparisonRow:
    dynamic = run_simulation(strategy, attacker, None, trials, seed)
    static = run_simulation(strategy.static_twin(), attacker, None, trials, seed)
    return ComparisonRow(
        preset=name,
        scenario=tag,
        attack_success_rate=dynamic.attack_success_rate,
        static_success_rate=static.attack_success_rate,
        attack_reduction_pct=attack_reduction_pct(dynamic.attack_success_rate, static.attack_success_rate),
        latency_overhead_pct=dynamic.latency_overhead_pct,
        throughput_reduction_pct=dynamic.throughput_reduction_pct,
        config_entropy_bits=dynamic.config_entropy_bits,
        success_std_error=dynamic.success_std_error,
    )


def compare_strategies(names: Sequence[str], trials: int = 10_000, seed: int = 0) -> list[ComparisonRow]:
    """Attack reduction vs each scenario's static twin, plus overheads and entropy."""
    if not names:
        raise MtdError("need at least one preset name")
    rows = []
    for name in names:
        p = preset(name)
        for tag, (strategy, attacker) in p.scenarios.items():
            rows.append(compare_scenario(name, tag, strategy, attacker, trials, seed))
    return rows


COMPARISON_COLUMNS = (
    "preset",
    "scenario",
    "attack_success_rate",
    "static_success_rate",
    "attack_reduction_pct",
    "latency_overhead_pct",
    "throughput_reduction_pct",
    "config_entropy_bits",
)


def comparison_to_csv(rows: Sequence[ComparisonRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COMPARISON_COLUMNS)
    for row in rows:
        d = row.to_dict()
        writer.writerow([d[c] for c in COMPARISON_COLUMNS])
    return buf.getvalue()


def sweep_to_csv(series: Sequence[tuple[float, SimResult]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["period_s", "success_rate", "stderr"])
    for period, res in series:
        writer.writerow([period, res.attack_success_rate, res.success_std_error])
    return buf.getvalue()


# ---------------------------------------------------------------- scenario files


@dataclass(frozen=True)
class Scenario:
    strategy: MtdStrategy
    attacker: AttackerModel
    duration_s: float
    trials: int
    seed: int


def _scenario_schema() -> dict:
    with open(data_path("schemas/scenario.schema.json")) as fh:
        return json.load(fh)


def _parse_period(value) -> float:
    if value is None or value == "inf":
        return INF
    return float(value)


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario JSON document.

    Raises ScenarioValidationError with a line number (syntax) or a field path
    (schema) in the message.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioValidationError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    validator = jsonschema.Draft7Validator(_scenario_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for err in errors:
            where = "/".join(str(p) for p in err.absolute_path) or "<root>"
            msgs.append(f"{where}: {err.message}")
        raise ScenarioValidationError("; ".join(msgs))
    try:
        dims = tuple(MtdDimension(**d) for d in doc["dimensions"])
        strategy = MtdStrategy(
            dims,
            _parse_period(doc.get("reconfig_period_s")),
            schedule=doc.get("schedule", "periodic"),
        )
        attacker = AttackerModel(**doc["attacker"])
    except MtdError as exc:
        raise ScenarioValidationError(str(exc)) from exc
    return Scenario(strategy, attacker, float(doc["duration_s"]), int(doc["trials"]), int(doc["seed"]))


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return parse_scenario(fh.read())


def scenario_to_dict(scenario: Scenario) -> dict:
    period = scenario.strategy.reconfig_period_s
    return {
        "dimensions": [asdict(d) for d in scenario.strategy.dimensions],
        "reconfig_period_s": None if math.isinf(period) else period,
        "schedule": scenario.strategy.schedule,
        "attacker": asdict(scenario.attacker),
        "duration_s": scenario.duration_s,
        "trials": scenario.trials,
        "seed": scenario.seed,
    }
