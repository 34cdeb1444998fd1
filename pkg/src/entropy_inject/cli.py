"""Command-line entry point: ``entropy-inject <command> ...``.

Exit codes: 0 success, 1 detector-positive, 2 validation/usage error, 3 internal error.
Every randomized command takes ``--seed`` and defaults to seed 0.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import aslr_model, detectors, mtd_sim, randomness
from .entropy_core import BYTE_ALPHABET, EntropyReport, histogram_of_stream, shannon_entropy, to_distribution

DEFAULT_SEED = 0
FORMATS = ("text", "json", "csv")

EXIT_OK = 0
EXIT_POSITIVE = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    """Bad input discovered after argument parsing; maps to exit code 2."""


@dataclass
class CommandResult:
    exit_code: int
    payload: str


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _table(header, rows) -> str:
    cells = [[str(h) for h in header]] + [[_fmt(c) for c in r] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return f"{value:.4f}"
    return "" if value is None else str(value)


def _render(fmt: str, header, rows, json_obj) -> str:
    if fmt == "json":
        return _json(json_obj)
    if fmt == "csv":
        return _csv(header, rows)
    return _table(header, rows)


# ---------------------------------------------------------------- entropy


def cmd_entropy(args) -> CommandResult:
    path = Path(args.file)
    try:
        with open(path, "rb") as fh:
            hist = histogram_of_stream(iter(lambda: fh.read(1 << 20), b""))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if hist.total == 0:
        report = EntropyReport(0.0, 0, BYTE_ALPHABET)
    else:
        report = shannon_entropy(to_distribution(hist), hist.total)
    doc = {"path": str(path), **report.to_dict()}
    header = ["path", "entropy_bits_per_symbol", "sample_size", "alphabet_size"]
    row = [str(path), report.entropy_bits_per_symbol, report.sample_size, report.alphabet_size]
    return CommandResult(EXIT_OK, _render(args.format, header, [row], doc))


# ---------------------------------------------------------------- rngtest

RNG_COLUMNS = ["generator", "chi_squared_p_value", "entropy_bits_per_byte", "generation_time_factor", "sample_size_bytes"]


def cmd_rngtest(args) -> CommandResult:
    if args.sample_bytes < randomness.MIN_SAMPLE_BYTES:
        raise UsageError(f"--sample-bytes must be >= {randomness.MIN_SAMPLE_BYTES}")
    kinds = randomness.TABLE_ORDER if args.all else (randomness.GeneratorKind(args.generator),)
    reports = randomness.benchmark_generators(kinds, args.sample_bytes, args.seed, wall_clock=args.wall_clock)
    if args.export:
        gen = randomness.make_generator(kinds[0], args.seed)
        Path(args.export).write_bytes(gen.next_block(args.sample_bytes))
    docs = [r.to_dict() for r in reports]
    rows = [[d[c] for c in RNG_COLUMNS] for d in docs]
    return CommandResult(EXIT_OK, _render(args.format, RNG_COLUMNS, rows, docs))


# ---------------------------------------------------------------- aslr


def cmd_aslr(args) -> CommandResult:
    fmt = args.format
    if args.mode == "table":
        profiles = aslr_model.builtin_profiles()
        docs = [p.to_dict() for p in profiles]
        header = ["os_name", "stack_bits", "heap_bits", "library_bits"]
        return CommandResult(EXIT_OK, _render(fmt, header, [[d[h] for h in header] for d in docs], docs))
    if args.mode == "estimate":
        est = aslr_model.expected_attempts(args.bits, args.model)
        header = ["bits", "expected_attempts", "model"]
        if fmt == "text":
            return CommandResult(EXIT_OK, f"{est.bits} bits ({est.model.value}): {est.expected_attempts!r} expected attempts\n")
        d = est.to_dict()
        return CommandResult(EXIT_OK, _render(fmt, header, [[d[h] for h in header]], d))
    if args.mode == "curve":
        curve = aslr_model.attempts_curve(args.bits_min, args.bits_max, args.model)
        model = aslr_model.GuessModel(args.model).value
        if fmt == "json":
            return CommandResult(
                EXIT_OK, _json([{"bits": b, "expected_attempts": v, "model": model} for b, v in curve])
            )
        if fmt == "csv":
            return CommandResult(EXIT_OK, aslr_model.curve_to_csv(curve, model))
        return CommandResult(EXIT_OK, _table(["bits", "expected_attempts", "model"], [[b, repr(v), model] for b, v in curve]))
    res = aslr_model.simulate_bruteforce(args.bits, args.trials, args.seed, args.model)
    d = res.to_dict()
    analytic = aslr_model.expected_attempts(args.bits, args.model).expected_attempts
    d["analytic_expected_attempts"] = analytic
    header = ["bits", "model", "trials", "mean_attempts", "std_error", "analytic_expected_attempts", "seed"]
    return CommandResult(EXIT_OK, _render(fmt, header, [[d[h] for h in header]], d))


def _check_bits(value: str) -> int:
    try:
        bits = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}")
    if not (0 <= bits <= aslr_model.MAX_BITS):
        raise argparse.ArgumentTypeError(f"bits must be in [0, {aslr_model.MAX_BITS}]")
    return bits


def _check_sim_bits(value: str) -> int:
    bits = _check_bits(value)
    if bits > aslr_model.MAX_SIMULATED_BITS:
        raise argparse.ArgumentTypeError(
            f"Monte Carlo is limited to {aslr_model.MAX_SIMULATED_BITS} bits; use 'aslr estimate'"
        )
    return bits


# ---------------------------------------------------------------- mtd

SIM_COLUMNS = [
    "attack_success_rate",
    "success_std_error",
    "mean_time_to_compromise_s",
    "latency_overhead_pct",
    "throughput_reduction_pct",
    "config_entropy_bits",
    "trials",
    "seed",
]


def _load_scenario(path):
    try:
        return mtd_sim.load_scenario(path)
    except OSError as exc:
        raise UsageError(f"cannot read scenario {path}: {exc.strerror or exc}") from exc
    except mtd_sim.ScenarioValidationError as exc:
        raise UsageError(f"invalid scenario {path}: {exc}") from exc


def _parse_periods(text: str) -> list[float]:
    try:
        periods = [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise UsageError(f"--periods: {exc}") from exc
    if not periods or any(not p > 0 for p in periods):
        raise UsageError("--periods must be a comma-separated list of positive numbers")
    return periods


def cmd_mtd(args) -> CommandResult:
    fmt = args.format
    if args.mode == "run":
        sc = _load_scenario(args.scenario)
        trials = args.trials or sc.trials
        seed = sc.seed if args.seed is None else args.seed
        res = mtd_sim.run_simulation(sc.strategy, sc.attacker, sc.duration_s, trials, seed)
        d = res.to_dict()
        return CommandResult(EXIT_OK, _render(fmt, SIM_COLUMNS, [[d[c] for c in SIM_COLUMNS]], d))

    if args.mode == "sweep":
        if args.scenario:
            sc = _load_scenario(args.scenario)
            strategy, attacker, duration = sc.strategy, sc.attacker, sc.duration_s
            trials = args.trials or sc.trials
            seed = sc.seed if args.seed is None else args.seed
        else:
            strategy, attacker = mtd_sim.reference_sweep_scenario()
            duration = None
            trials = args.trials or 2000
            seed = DEFAULT_SEED if args.seed is None else args.seed
        periods = _parse_periods(args.periods)
        series = mtd_sim.frequency_sweep(strategy, attacker, periods, trials, seed, duration)
        if fmt == "csv":
            return CommandResult(EXIT_OK, mtd_sim.sweep_to_csv(series))
        docs = [
            {"period_s": p, "success_rate": r.attack_success_rate, "stderr": r.success_std_error,
             "latency_overhead_pct": r.latency_overhead_pct}
            for p, r in series
        ]
        header = ["period_s", "success_rate", "stderr", "latency_overhead_pct"]
        return CommandResult(EXIT_OK, _render(fmt, header, [[d[h] for h in header] for d in docs], docs))

    if args.mode == "compare":
        names = args.presets or list(mtd_sim.TABLE_II_PRESETS)
        trials = args.trials or 10_000
        seed = DEFAULT_SEED if args.seed is None else args.seed
        try:
            rows = mtd_sim.compare_strategies(names, trials, seed)
        except mtd_sim.UnknownPresetError as exc:
            raise UsageError(str(exc)) from exc
        if fmt == "csv":
            return CommandResult(EXIT_OK, mtd_sim.comparison_to_csv(rows))
        docs = [r.to_dict() for r in rows]
        cols = list(mtd_sim.COMPARISON_COLUMNS)
        return CommandResult(EXIT_OK, _render(fmt, cols, [[d[c] for c in cols] for d in docs], docs))

    try:
        p = mtd_sim.preset(args.name)
    except mtd_sim.UnknownPresetError as exc:
        raise UsageError(str(exc)) from exc
    docs = {}
    for tag, (strategy, attacker) in p.scenarios.items():
        sc = mtd_sim.Scenario(strategy, attacker, attacker.max_campaign_s, args.trials or 10_000,
                              DEFAULT_SEED if args.seed is None else args.seed)
        docs[tag] = mtd_sim.scenario_to_dict(sc)
    if fmt == "text":
        lines = []
        for tag, doc in docs.items():
            dims = ", ".join(f"{d['name']}({d['cardinality']})" for d in doc["dimensions"])
            lines.append(f"{tag}: period {doc['reconfig_period_s']} s; dimensions {dims}")
        return CommandResult(EXIT_OK, "\n".join(lines) + "\n")
    if fmt == "csv":
        header = ["scenario", "dimension", "cardinality", "recon_cost_s", "reconfig_period_s"]
        rows = [
            [tag, d["name"], d["cardinality"], d["recon_cost_s"], doc["reconfig_period_s"]]
            for tag, doc in docs.items()
            for d in doc["dimensions"]
        ]
        return CommandResult(EXIT_OK, _csv(header, rows))
    return CommandResult(EXIT_OK, _json(docs))


# ---------------------------------------------------------------- dga

DGA_COLUMNS = ["domain", "label_scored", "score_bits", "threshold_bits", "label", "effective_label_length"]


def cmd_dga(args) -> CommandResult:
    domains = list(args.domains)
    if args.file:
        try:
            with open(args.file) as fh:
                domains += [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
        except OSError as exc:
            raise UsageError(f"cannot read {args.file}: {exc.strerror or exc}") from exc
    if not domains:
        raise UsageError("no domains given")
    baseline = detectors.load_baseline()
    verdicts = []
    for d in domains:
        try:
            verdicts.append(detectors.check_domain(d, baseline, args.threshold))
        except detectors.EmptyDomainError as exc:
            raise UsageError(str(exc)) from exc
    docs = [v.to_dict() for v in verdicts]
    code = EXIT_POSITIVE if any(v.label == "suspicious" for v in verdicts) else EXIT_OK
    if args.format == "json":
        payload = _json({"scored_label": "registrable label (left of the public suffix)", "verdicts": docs})
    else:
        payload = _render(args.format, DGA_COLUMNS, [[d[c] for c in DGA_COLUMNS] for d in docs], docs)
    return CommandResult(code, payload)


# ---------------------------------------------------------------- scan

SCAN_COLUMNS = ["path", "entropy_bits_per_byte", "size_bytes", "label"]


def cmd_scan(args) -> CommandResult:
    skip = detectors.SKIP_EXTENSIONS if args.skip_ext is None else frozenset(
        e.lower() if e.startswith(".") else "." + e.lower() for e in args.skip_ext
    )
    policy = detectors.ScanPolicy(args.threshold, args.min_size, skip)
    try:
        findings = detectors.scan_path(args.root, policy)
    except detectors.UnreadableRootError as exc:
        raise UsageError(str(exc)) from exc
    jsonl = detectors.findings_to_jsonl(findings)
    if args.snapshot_out:
        Path(args.snapshot_out).write_text(jsonl)

    if args.compare_against:
        try:
            before = detectors.findings_from_jsonl(Path(args.compare_against).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read snapshot {args.compare_against}: {exc.strerror or exc}") from exc
        except detectors.DetectorError as exc:
            raise UsageError(str(exc)) from exc
        delta = detectors.compare_snapshots(before, findings, args.delta, args.alert_fraction)
        code = EXIT_POSITIVE if delta.alert else EXIT_OK
        d = delta.to_dict()
        if args.format == "json":
            return CommandResult(code, _json(d))
        header = ["compared", "flagged_count", "new_high_entropy_count", "removed_count", "flagged_fraction", "alert"]
        row = [d[h] for h in header]
        if args.format == "csv":
            return CommandResult(code, _csv(header, [row]))
        text = _table(header, [row])
        text += "".join(f"flagged: {p}\n" for p in delta.flagged)
        text += "".join(f"new high-entropy: {p}\n" for p in delta.new_high_entropy)
        return CommandResult(code, text)

    code = EXIT_POSITIVE if any(f.label == "high_entropy" for f in findings) else EXIT_OK
    if args.format == "json":
        return CommandResult(code, jsonl)
    rows = [[f.path, f.entropy_bits_per_byte, f.size_bytes, f.label] for f in findings]
    return CommandResult(code, _render(args.format, SCAN_COLUMNS, rows, None))


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a sub-command default from clobbering a value given before the sub-command
    common.add_argument("--format", choices=FORMATS, default=argparse.SUPPRESS, help="output format (default text)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--out", default=argparse.SUPPRESS, help="write output to this path instead of stdout")

    parser = argparse.ArgumentParser(
        prog="entropy-inject",
        description="Entropy analytics, hybrid RNG testing, ASLR and MTD models, entropy-based detectors.",
    )
    parser.add_argument("--format", choices=FORMATS, default="text", help="output format (default text)")
    parser.add_argument("--seed", type=int, default=None, help=f"random seed (default {DEFAULT_SEED})")
    parser.add_argument("--out", default=None, help="write output to this path instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("entropy", parents=[common], help="Shannon entropy of a file's bytes")
    p.add_argument("file")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("rngtest", parents=[common], help="chi-squared + entropy battery on generator output")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--generator", choices=[k.value for k in randomness.GeneratorKind], default="emn_high")
    g.add_argument("--all", action="store_true", help="all four generators, table-style comparison")
    p.add_argument("--sample-bytes", type=int, default=65536, help="bytes drawn per generator (>= 4096)")
    p.add_argument("--wall-clock", action="store_true", help="time factors from wall clock instead of the cost model")
    p.add_argument("--export", metavar="PATH", help="also write the raw sample of the (first) generator here")
    p.set_defaults(func=cmd_rngtest)

    p = sub.add_parser("aslr", parents=[common], help="ASLR profiles and brute-force cost")
    modes = p.add_subparsers(dest="mode", required=True, metavar="MODE")
    models = [m.value for m in aslr_model.GuessModel]
    m = modes.add_parser("table", parents=[common], help="built-in per-OS entropy bits")
    m = modes.add_parser("estimate", parents=[common], help="analytic expected attempts")
    m.add_argument("bits", type=_check_bits)
    m.add_argument("--model", choices=models, default="without_replacement")
    m = modes.add_parser("curve", parents=[common], help="expected attempts over a bit range")
    m.add_argument("bits_min", type=_check_bits)
    m.add_argument("bits_max", type=_check_bits)
    m.add_argument("--model", choices=models, default="without_replacement")
    m = modes.add_parser("simulate", parents=[common], help="Monte Carlo brute force (bits <= 24)")
    m.add_argument("bits", type=_check_sim_bits)
    m.add_argument("trials", type=int)
    m.add_argument("--model", choices=models, default="without_replacement")
    p.set_defaults(func=cmd_aslr)

    p = sub.add_parser("mtd", parents=[common], help="moving target defense simulation")
    modes = p.add_subparsers(dest="mode", required=True, metavar="MODE")
    m = modes.add_parser("run", parents=[common], help="simulate a scenario file")
    m.add_argument("scenario")
    m.add_argument("--trials", type=int)
    m = modes.add_parser("sweep", parents=[common], help="success rate vs reconfiguration period")
    m.add_argument("scenario", nargs="?", help="scenario file (default: reference scenario)")
    m.add_argument("--periods", default=",".join(str(x) for x in mtd_sim.REFERENCE_SWEEP_PERIODS))
    m.add_argument("--trials", type=int)
    m = modes.add_parser("compare", parents=[common], help="attack reduction and overhead per preset")
    m.add_argument("presets", nargs="*", metavar="PRESET", help="preset names (default: the four table presets)")
    m.add_argument("--trials", type=int)
    m = modes.add_parser("preset", parents=[common], help="show a preset as scenario JSON")
    m.add_argument("name", choices=mtd_sim.PRESET_NAMES)
    m.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_mtd)

    p = sub.add_parser("dga", parents=[common], help="relative-entropy DGA domain check")
    p.add_argument("domains", nargs="*")
    p.add_argument("--file", help="newline-delimited domain list")
    p.add_argument("--threshold", type=float, help="override the shipped threshold (bits)")
    p.set_defaults(func=cmd_dga)

    p = sub.add_parser("scan", parents=[common], help="file entropy scan and snapshot comparison")
    p.add_argument("root")
    p.add_argument("--threshold", type=float, default=detectors.FILE_ENTROPY_THRESHOLD, help="bits/byte")
    p.add_argument("--min-size", type=int, default=detectors.FILE_MIN_SIZE, help="bytes")
    p.add_argument("--skip-ext", nargs="*", help="replace the skip-listed extensions")
    p.add_argument("--snapshot-out", metavar="PATH", help="write findings as JSON lines")
    p.add_argument("--compare-against", metavar="PATH", help="earlier snapshot (JSON lines)")
    p.add_argument("--delta", type=float, default=detectors.DEFAULT_DELTA_THRESHOLD, help="bits/byte increase to flag")
    p.add_argument("--alert-fraction", type=float, default=detectors.DEFAULT_ALERT_FRACTION)
    p.set_defaults(func=cmd_scan)
    return parser


def run(argv=None) -> tuple[CommandResult, argparse.Namespace]:
    parser = build_parser()
    args = parser.parse_args(argv)
    needs_seed_default = args.func in (cmd_rngtest, cmd_aslr)
    if args.seed is None and needs_seed_default:
        args.seed = DEFAULT_SEED
    return args.func(args), args


def main(argv=None) -> int:
    try:
        result, args = run(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"entropy-inject: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"entropy-inject: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"entropy-inject: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.out:
        Path(args.out).write_text(result.payload)
    else:
        sys.stdout.write(result.payload)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
