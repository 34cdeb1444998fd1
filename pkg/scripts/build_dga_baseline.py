"""Rebuild src/entropy_inject/data/dga_baseline.json from the bundled legit-domain list.

Letter counts come from each domain's registrable label; the threshold is the
corpus score quantile that leaves at most 10% of the corpus above it.

    python scripts/build_dga_baseline.py
"""

import hashlib
import json
from pathlib import Path

from entropy_inject.detectors import build_baseline, load_legit_domains

DATA = Path(__file__).resolve().parents[1] / "src" / "entropy_inject" / "data"


def main():
    domains = load_legit_domains()
    digest = hashlib.sha256("\n".join(domains).encode()).hexdigest()[:12]
    baseline = build_baseline(domains, corpus_id=f"legit_domains.txt:{len(domains)}:{digest}")
    out = DATA / "dga_baseline.json"
    out.write_text(json.dumps(baseline.to_dict(), indent=2) + "\n")
    print(f"{len(domains)} domains, threshold {baseline.threshold_bits:.4f} bits -> {out}")


if __name__ == "__main__":
    main()
