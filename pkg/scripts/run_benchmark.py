#!/usr/bin/env python3
"""Run the full synthetic pipeline: simulate, calibrate, evaluate, report.

Produces <out>/benchmark, <out>/calibration, and <out>/reports using the
shipped detector and regime configs.  The whole run is deterministic
given --seed; rerunning into a fresh directory gives byte-identical
files.

Usage: python3 scripts/run_benchmark.py [--out DIR] [--seed N] [--quick]
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from proofbench.benchmark import DEFAULT_SEED
from proofbench.cli import main as cli_main


def run(argv: list[str]) -> None:
    print(f"$ proofbench {' '.join(argv)}")
    code = cli_main(argv)
    if code != 0:
        raise SystemExit(f"step failed with exit code {code}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/benchmark")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--quick", action="store_true",
                        help="small populations for a fast smoke pass")
    args = parser.parse_args(argv)

    bench = os.path.join(args.out, "benchmark")
    cal = os.path.join(args.out, "calibration")
    rep = os.path.join(args.out, "reports")
    n = "240" if args.quick else "2000"

    run(["simulate", "--seed", str(args.seed), "--n-per-tier", n,
         "--n-natural", n, "--out", bench])
    run(["calibrate", "--records", os.path.join(bench, "records.jsonl"),
         "--out", cal])
    run(["evaluate",
         "--records", os.path.join(cal, "tagged_records.jsonl"),
         "--weights", os.path.join(cal, "calibration.json"),
         "--summary", os.path.join(bench, "summary.json"),
         "--out", rep])
    run(["report", "--bundle", rep])
    print(f"pipeline complete under {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
