"""Count change-detector alarms on long stationary streams.

    python scripts/detector_false_alarms.py --suite stationary_noisy --frames 10000
"""

import argparse

from driftrack.bench import ExperimentConfig, run_experiment
from driftrack.tracker import TrackerConfig


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--suite", default="stationary_noisy")
    ap.add_argument("--frames", type=int, default=10_000)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--lambda", dest="lambda_", type=float, default=0.15)
    ap.add_argument("--delta", type=float, default=0.005)
    args = ap.parse_args()

    tracker = TrackerConfig(update_policy="on_change", replacement="none", lambda_=args.lambda_, delta=args.delta)
    cfg = ExperimentConfig(suite=args.suite, seeds=tuple(range(args.seeds)), num_frames=args.frames, tracker=tracker)
    rep = run_experiment(cfg)
    for r in rep.per_seed:
        print(f"seed {r.seed:3d}  alarms {r.alarms}  mean score {r.mean_max_score:.4f}")
    print(f"total alarms {sum(r.alarms for r in rep.per_seed)} over {args.seeds} x {args.frames} frames")


if __name__ == "__main__":
    main()
