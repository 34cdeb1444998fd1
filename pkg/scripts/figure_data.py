"""Write the CSV behind every reproduced figure and table into one directory.

    python scripts/figure_data.py [OUTDIR] [--trials N] [--seed S]

Files: fig1_attempts.csv, fig2_sweep.csv, table1_aslr.csv, table2_mtd.csv,
table3_rng.csv, cpmtd.csv. Plotting is left to whatever tool you like; see the
README for a matplotlib recipe per figure.
"""

import argparse
from pathlib import Path

from entropy_inject.cli import main as cli


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("outdir", nargs="?", default="figure_data")
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    seed = ["--seed", str(args.seed)]
    trials = ["--trials", str(args.trials)]

    jobs = {
        "fig1_attempts.csv": ["aslr", "curve", "0", "32"],
        "table1_aslr.csv": ["aslr", "table"],
        "table3_rng.csv": ["rngtest", "--all", *seed],
        "fig2_sweep.csv": ["mtd", "sweep", *trials, *seed],
        "table2_mtd.csv": ["mtd", "compare", *trials, *seed],
        "cpmtd.csv": ["mtd", "compare", "cpmtd_power", *trials, *seed],
    }
    for name, argv in jobs.items():
        code = cli(["--format", "csv", "--out", str(out / name), *argv])
        print(f"{name:20s} exit {code}")


if __name__ == "__main__":
    main()
