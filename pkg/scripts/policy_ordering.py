"""Update policies compared on every drifting suite entry.

Prints mean accuracy +- standard error and the number of retraining calls for
each policy, with the auxiliary buffer switched off so that only the update
schedule differs.

    python scripts/policy_ordering.py --seeds 20
"""

import argparse

from driftrack.bench import ExperimentConfig, run_experiment
from driftrack.simulator import standard_suite
from driftrack.tracker import TrackerConfig

POLICIES = ("every_frame", "random:0.1", "periodic:5", "periodic:10", "periodic:15", "on_change")


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--replacement", default="none")
    args = ap.parse_args()

    seeds = tuple(range(args.seeds))
    for name, _, _ in standard_suite():
        print(f"== {name}")
        for policy in POLICIES:
            tracker = TrackerConfig(update_policy=policy, replacement=args.replacement)
            rep = run_experiment(ExperimentConfig(suite=name, seeds=seeds, tracker=tracker))
            print(
                f"  {policy:<12} acc {rep.mean('accuracy'):.4f} +- {rep.stderr('accuracy'):.4f}"
                f"  updates {rep.mean('updates_performed'):7.1f}"
            )


if __name__ == "__main__":
    main()
