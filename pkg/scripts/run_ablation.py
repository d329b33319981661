"""Policy x replacement table on one suite entry, written as CSV.

    python scripts/run_ablation.py --suite recurrent5 --seeds 20 --out table.csv
"""

import argparse
from pathlib import Path

from driftrack.bench import ExperimentConfig, ablation_csv, run_ablation


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--suite", default="recurrent5")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    base = ExperimentConfig(suite=args.suite, seeds=tuple(range(args.seeds)))
    text = ablation_csv(run_ablation(base, workers=args.workers), args.seeds)
    if args.out:
        args.out.write_text(text)
    else:
        print(text, end="")


if __name__ == "__main__":
    main()
