"""Command line entry point.

    driftrack simulate --suite recurrent5 --out stream.jsonl
    driftrack run --config exp.json --format csv --out report.csv
    driftrack ablate --suite recurrent5 --seeds 20 --out table.csv
    driftrack entropy-trace --suite recurrent5 --out entropy.csv

``DRIFTRACK_SEED`` shifts the base seed: ``--seeds N`` runs seeds
``base .. base + N - 1``.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .bench import ConfigError, ExperimentConfig, ablation_csv, run_ablation, run_experiment
from .simulator import gen_stream, suite_entry, write_stream


def _base_seed() -> int:
    raw = os.environ.get("DRIFTRACK_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"DRIFTRACK_SEED must be an integer, got {raw!r}") from None


def _positive(text: str) -> int:
    n = int(text)
    if n <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="driftrack", description="Drift-aware tracking experiments on synthetic streams.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeds=True):
        p.add_argument("--config", type=Path, help="flat JSON experiment config")
        p.add_argument("--suite", help="suite entry name (overrides the config)")
        if seeds:
            p.add_argument("--seeds", type=_positive, help="number of seeds (overrides the config)")
        p.add_argument("--out", type=Path, help="output path (default: stdout)")
        p.add_argument("--frames", type=_positive, help="truncate or extend streams to this many frames")
        p.add_argument("--workers", type=_positive, default=1, help="processes for independent seeds")

    p = sub.add_parser("simulate", help="dump one stream as line-delimited JSON")
    p.add_argument("--suite", default="recurrent5")
    p.add_argument("--seed", type=int, default=None, help="stream seed (default: DRIFTRACK_SEED or 0)")
    p.add_argument("--frames", type=_positive)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("run", help="run one experiment and print its report")
    common(p)
    p.add_argument("--format", choices=("csv", "json"), default="json")

    p = sub.add_parser("ablate", help="policy x replacement table")
    common(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("entropy-trace", help="buffer entropy every few frames, as CSV")
    common(p)
    return parser


def _experiment(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    kw = {}
    if args.suite:
        kw["suite"] = args.suite
    if getattr(args, "seeds", None):
        kw["seeds"] = tuple(range(args.seeds))
    if args.frames:
        kw["num_frames"] = args.frames
    if kw:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **{k: list(v) if k == "seeds" else v for k, v in kw.items()}})
    base = _base_seed()
    if base:
        cfg = replace(cfg, seeds=tuple(base + s for s in cfg.seeds))
    return cfg


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        out.write_text(text, encoding="utf-8")


def _cmd_simulate(args) -> int:
    try:
        schedule, scfg = suite_entry(args.suite)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None
    seed = _base_seed() if args.seed is None else args.seed
    scfg = replace(scfg, seed=seed, num_frames=args.frames)
    frames, _ = gen_stream(schedule, scfg)
    if args.out is None:
        buf = io.StringIO()
        write_stream(frames, buf)
        sys.stdout.write(buf.getvalue())
    else:
        write_stream(frames, args.out)
    return 0


def _cmd_run(args) -> int:
    cfg = _experiment(args)
    report = run_experiment(cfg, workers=args.workers)
    out = args.out or (Path(cfg.output) if cfg.output else None)
    _emit(report.to_csv() if args.format == "csv" else report.to_json(), out)
    return 0


def _cmd_ablate(args) -> int:
    import json

    cfg = _experiment(args)
    table = run_ablation(cfg, workers=args.workers)
    if args.format == "csv":
        text = ablation_csv(table, len(cfg.seeds))
    else:
        text = json.dumps(
            {f"{p}|{r}": rep.aggregate for (p, r), rep in table.items()},
            indent=2,
        )
    _emit(text, args.out)
    return 0


def _cmd_entropy(args) -> int:
    cfg = _experiment(args)
    report = run_experiment(cfg, workers=args.workers)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["seed", "frame", "H_Y", "H_phi_given_Y", "H_joint"])
    for r in report.per_seed:
        for frame, hy, hc, hj in r.entropy_trace:
            writer.writerow([r.seed, frame, repr(hy), repr(hc), repr(hj)])
    _emit(buf.getvalue(), args.out)
    return 0


COMMANDS = {"simulate": _cmd_simulate, "run": _cmd_run, "ablate": _cmd_ablate, "entropy-trace": _cmd_entropy}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad flags
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"driftrack: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"driftrack: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
