"""Entropy-based detectors.

DGA domains: relative entropy of a label's character frequencies against a
baseline built from legitimate domains. Ransomware: byte entropy of every file
under a directory, and entropy jumps between two snapshots of it.
"""

from __future__ import annotations

import json
import math
import os
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

from ._data import data_path
from .entropy_core import (
    ProbabilityDistribution,
    histogram_of_stream,
    relative_entropy,
    shannon_entropy,
    to_distribution,
)

DGA_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789-"
DEFAULT_SMOOTHING = 0.5  # pseudo-count per symbol
DEFAULT_MIN_LENGTH = 6
DEFAULT_FP_RATE = 0.10

FILE_ENTROPY_THRESHOLD = 7.2
FILE_MIN_SIZE = 1024
DEFAULT_DELTA_THRESHOLD = 2.0
DEFAULT_ALERT_FRACTION = 0.2
SKIP_EXTENSIONS = frozenset(
    {
        ".zip", ".gz", ".tgz", ".bz2", ".xz", ".7z", ".rar", ".zst", ".lz4",
        ".jpg", ".jpeg", ".png", ".gif", ".webp", ".heic",
        ".mp3", ".mp4", ".m4a", ".aac", ".ogg", ".flac", ".mkv", ".webm", ".avi", ".mov",
        ".pdf", ".docx", ".xlsx", ".pptx", ".jar", ".apk",
        ".gpg", ".pgp", ".age", ".kdbx", ".enc", ".p12", ".pfx",
    }
)

_READ_CHUNK = 1 << 20


class DetectorError(ValueError):
    pass


class EmptyDomainError(DetectorError):
    pass


class UnreadableRootError(DetectorError):
    pass


# ---------------------------------------------------------------- DGA


@dataclass(frozen=True)
class LetterBaseline:
    alphabet: str
    counts: tuple[int, ...]
    corpus_id: str
    threshold_bits: float
    min_length: int = DEFAULT_MIN_LENGTH

    def __post_init__(self):
        if len(self.counts) != len(self.alphabet):
            raise DetectorError(f"{len(self.counts)} counts for a {len(self.alphabet)}-symbol alphabet")
        if min(self.counts) < 0 or sum(self.counts) == 0:
            raise DetectorError("baseline counts must be non-negative with a positive total")

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def frequencies(self) -> ProbabilityDistribution:
        return ProbabilityDistribution.from_weights(self.counts)

    def to_dict(self) -> dict:
        return {
            "corpus_id": self.corpus_id,
            "alphabet": self.alphabet,
            "counts": list(self.counts),
            "total": self.total,
            "threshold_bits": self.threshold_bits,
            "min_length": self.min_length,
            "smoothing_pseudocount": DEFAULT_SMOOTHING,
            "false_positive_target": DEFAULT_FP_RATE,
        }


@dataclass
class DgaVerdict:
    domain: str
    label_scored: str
    score_bits: float
    effective_label_length: int
    threshold_bits: float | None = None
    label: str | None = None

    def to_dict(self) -> dict:
        return {
            "domain": self.domain,
            "label_scored": self.label_scored,
            "score_bits": self.score_bits,
            "threshold_bits": self.threshold_bits,
            "label": self.label,
            "effective_label_length": self.effective_label_length,
        }


@lru_cache(maxsize=4)
def _suffixes(path: str) -> frozenset[str]:
    return frozenset(_read_list(Path(path)))


def public_suffixes() -> frozenset[str]:
    return _suffixes(str(data_path("public_suffixes.txt")))


def _read_list(path: Path) -> list[str]:
    with open(path) as fh:
        return [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]


def registrable_label(domain: str) -> str:
    """Lowercase, drop the public suffix and a leading ``www``, return the label
    left of the suffix, restricted to the DGA alphabet."""
    labels = [lb for lb in domain.strip().lower().rstrip(".").split(".") if lb]
    suffixes = public_suffixes()
    # longest matching suffix first
    for n in (3, 2, 1):
        if len(labels) > n and ".".join(labels[-n:]) in suffixes:
            labels = labels[:-n]
            break
    else:
        if len(labels) > 1:
            labels = labels[:-1]
    if len(labels) > 1 and labels[0] == "www":
        labels = labels[1:]
    label = labels[-1] if labels else ""
    return "".join(ch for ch in label if ch in DGA_ALPHABET)


def label_distribution(label: str, alphabet: str = DGA_ALPHABET) -> ProbabilityDistribution:
    index = {ch: i for i, ch in enumerate(alphabet)}
    counts = [0] * len(alphabet)
    for ch in label:
        counts[index[ch]] += 1
    return ProbabilityDistribution.from_weights(counts)


def score_domain(
    domain: str, baseline: LetterBaseline | None = None, smoothing: float = DEFAULT_SMOOTHING
) -> DgaVerdict:
    """Relative entropy (bits) of the registrable label against the baseline.

    ``smoothing`` is a pseudo-count added to every baseline symbol count.
    """
    baseline = baseline or load_baseline()
    label = registrable_label(domain)
    if not label:
        raise EmptyDomainError(f"{domain!r} has no scorable characters after normalization")
    observed = label_distribution(label, baseline.alphabet)
    # a pseudo-count c on counts is additive smoothing c / total on probabilities
    score = relative_entropy(observed, baseline.frequencies, smoothing / baseline.total)
    return DgaVerdict(domain, label, max(score, 0.0), len(label))


def classify_domain(verdict: DgaVerdict, threshold_bits: float, min_length: int = DEFAULT_MIN_LENGTH) -> DgaVerdict:
    suspicious = verdict.score_bits > threshold_bits and verdict.effective_label_length >= min_length
    verdict.threshold_bits = threshold_bits
    verdict.label = "suspicious" if suspicious else "benign"
    return verdict


def check_domain(domain: str, baseline: LetterBaseline | None = None, threshold_bits: float | None = None) -> DgaVerdict:
    baseline = baseline or load_baseline()
    threshold = baseline.threshold_bits if threshold_bits is None else threshold_bits
    return classify_domain(score_domain(domain, baseline), threshold, baseline.min_length)


def baseline_counts(labels: Iterable[str], alphabet: str = DGA_ALPHABET) -> tuple[int, ...]:
    index = {ch: i for i, ch in enumerate(alphabet)}
    counts = [0] * len(alphabet)
    for label in labels:
        for ch in label:
            counts[index[ch]] += 1
    return tuple(counts)


def calibrate_threshold(scores: Sequence[float], fp_rate: float = DEFAULT_FP_RATE, population: int | None = None) -> float:
    """Smallest score threshold leaving at most ``fp_rate * population`` of
    ``scores`` strictly above it.

    ``scores`` are the corpus entries the classifier could flag at all (long
    enough labels); ``population`` is the full corpus size the rate refers to.
    """
    ordered = sorted(scores)
    if not ordered:
        raise DetectorError("no scores to calibrate on")
    population = len(ordered) if population is None else population
    allowed = math.floor(fp_rate * population + 1e-9)
    if allowed >= len(ordered):
        return ordered[0]
    return ordered[len(ordered) - allowed - 1]


def build_baseline(
    domains: Iterable[str],
    corpus_id: str,
    fp_rate: float = DEFAULT_FP_RATE,
    min_length: int = DEFAULT_MIN_LENGTH,
) -> LetterBaseline:
    labels = [lb for lb in (registrable_label(d) for d in domains) if lb]
    provisional = LetterBaseline(DGA_ALPHABET, baseline_counts(labels), corpus_id, math.inf, min_length)
    eligible = [score_domain(lb, provisional).score_bits for lb in labels if len(lb) >= min_length]
    threshold = calibrate_threshold(eligible, fp_rate, population=len(labels))
    return LetterBaseline(DGA_ALPHABET, provisional.counts, corpus_id, threshold, min_length)


def load_legit_domains() -> list[str]:
    return _read_list(data_path("legit_domains.txt"))


def load_baseline(path=None) -> LetterBaseline:
    with open(path or data_path("dga_baseline.json")) as fh:
        doc = json.load(fh)
    return LetterBaseline(
        alphabet=doc["alphabet"],
        counts=tuple(doc["counts"]),
        corpus_id=doc["corpus_id"],
        threshold_bits=doc["threshold_bits"],
        min_length=doc.get("min_length", DEFAULT_MIN_LENGTH),
    )


# ---------------------------------------------------------------- file entropy


@dataclass(frozen=True)
class ScanPolicy:
    threshold_bits_per_byte: float = FILE_ENTROPY_THRESHOLD
    min_size_bytes: int = FILE_MIN_SIZE
    skip_extensions: frozenset = field(default=SKIP_EXTENSIONS)


@dataclass(frozen=True)
class FileEntropyFinding:
    path: str
    entropy_bits_per_byte: float
    size_bytes: int
    label: str
    reason: str | None = None

    def to_dict(self) -> dict:
        d = {
            "path": self.path,
            "entropy_bits_per_byte": self.entropy_bits_per_byte,
            "size_bytes": self.size_bytes,
            "label": self.label,
        }
        if self.reason:
            d["reason"] = self.reason
        return d


def _iter_chunks(path: Path):
    with open(path, "rb") as fh:
        while chunk := fh.read(_READ_CHUNK):
            yield chunk


def file_entropy(path) -> tuple[float, int]:
    hist = histogram_of_stream(_iter_chunks(Path(path)))
    if hist.total == 0:
        return 0.0, 0
    return shannon_entropy(to_distribution(hist), hist.total).entropy_bits_per_symbol, hist.total


def _scan_file(path: Path, rel: str, policy: ScanPolicy) -> FileEntropyFinding:
    try:
        entropy, size = file_entropy(path)
    except OSError as exc:
        return FileEntropyFinding(rel, 0.0, 0, "skipped", f"read error: {exc.strerror or exc}")
    if path.suffix.lower() in policy.skip_extensions:
        return FileEntropyFinding(rel, entropy, size, "skipped", "skip-listed extension")
    if size < policy.min_size_bytes:
        return FileEntropyFinding(rel, entropy, size, "skipped", "below minimum size")
    label = "high_entropy" if entropy > policy.threshold_bits_per_byte else "normal"
    return FileEntropyFinding(rel, entropy, size, label)


def scan_path(root, policy: ScanPolicy | None = None) -> list[FileEntropyFinding]:
    """One finding per regular file under ``root``, sorted by relative POSIX path.

    Symlinks are not followed. A file that cannot be read is reported as
    skipped; only an unreadable root aborts the scan.
    """
    policy = policy or ScanPolicy()
    root = Path(root)
    if not root.is_dir() or not os.access(root, os.R_OK | os.X_OK):
        raise UnreadableRootError(f"cannot read directory {root}")
    findings = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            path = Path(dirpath) / name
            if path.is_symlink() or not path.is_file():
                continue
            findings.append(_scan_file(path, path.relative_to(root).as_posix(), policy))
    findings.sort(key=lambda f: f.path)
    return findings


def findings_to_jsonl(findings: Sequence[FileEntropyFinding]) -> str:
    return "".join(json.dumps(f.to_dict(), sort_keys=False) + "\n" for f in findings)


def findings_from_jsonl(text: str) -> list[FileEntropyFinding]:
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            out.append(
                FileEntropyFinding(
                    doc["path"], float(doc["entropy_bits_per_byte"]), int(doc["size_bytes"]),
                    doc["label"], doc.get("reason"),
                )
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise DetectorError(f"snapshot line {n}: {exc}") from exc
    return out


@dataclass
class SnapshotDelta:
    flagged: list[str]
    new_high_entropy: list[str]
    removed: list[str]
    compared: int
    flagged_fraction: float
    delta_threshold: float
    alert_fraction: float
    alert: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["flagged_count"] = len(self.flagged)
        d["new_high_entropy_count"] = len(self.new_high_entropy)
        d["removed_count"] = len(self.removed)
        return d


def compare_snapshots(
    before: Sequence[FileEntropyFinding],
    after: Sequence[FileEntropyFinding],
    delta_threshold: float = DEFAULT_DELTA_THRESHOLD,
    alert_fraction: float = DEFAULT_ALERT_FRACTION,
) -> SnapshotDelta:
    """Flag files whose byte entropy rose by at least ``delta_threshold`` bits/byte.

    Only paths present and not skipped in both snapshots are compared.
    """
    b = {f.path: f for f in before}
    a = {f.path: f for f in after}
    common = sorted(p for p in b.keys() & a.keys() if b[p].label != "skipped" and a[p].label != "skipped")
    flagged = [
        p for p in common if a[p].entropy_bits_per_byte - b[p].entropy_bits_per_byte >= delta_threshold
    ]
    new_high = sorted(p for p in a.keys() - b.keys() if a[p].label == "high_entropy")
    removed = sorted(b.keys() - a.keys())
    fraction = len(flagged) / len(common) if common else 0.0
    return SnapshotDelta(
        flagged=flagged,
        new_high_entropy=new_high,
        removed=removed,
        compared=len(common),
        flagged_fraction=fraction,
        delta_threshold=delta_threshold,
        alert_fraction=alert_fraction,
        alert=bool(common) and fraction >= alert_fraction,
    )
