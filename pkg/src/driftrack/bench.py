"""Experiment runner: drive the tracker over suite streams and summarise.

Configs are flat JSON objects; tracker keys use the same names as
:class:`~driftrack.tracker.TrackerConfig` except that ``lambda_`` is spelled
``lambda``.  Reports serialise to JSON or CSV and parse back unchanged.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .memory import buffer_entropy
from .simulator import DriftSchedule, StreamConfig, gen_stream, suite_entry
from .tracker import TrackerConfig, tracker_init

ABLATION_POLICIES = ("random:0.1", "periodic:5", "periodic:10", "periodic:15", "on_change")
ABLATION_REPLACEMENTS = ("none", "random", "density", "score_discretized")

POLICY_LABELS = {
    "random:0.1": "Random",
    "periodic:5": "Periodic 5",
    "periodic:10": "Periodic 10",
    "periodic:15": "Periodic 15",
    "on_change": "Change detection",
}
REPLACEMENT_LABELS = {
    "none": "No replacement",
    "random": "Random replacement",
    "density": "Density replacement",
    "score_discretized": "Score-discretised density",
}

_TRACKER_KEYS = {f.name: ("lambda" if f.name == "lambda_" else f.name) for f in fields(TrackerConfig)}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    suite: str = "recurrent5"
    seeds: tuple[int, ...] = tuple(range(20))
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    false_alarm_window: int = 25
    recovery_window: int = 50
    entropy_every: int = 50
    num_frames: Optional[int] = None
    output: Optional[str] = None
    # programmatic alternative to a suite entry; not serialised
    custom: Optional[tuple[DriftSchedule, StreamConfig]] = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.false_alarm_window <= 0 or self.recovery_window <= 0 or self.entropy_every <= 0:
            raise ConfigError("window lengths must be > 0")
        if self.num_frames is not None and self.num_frames < 2:
            raise ConfigError("num_frames must be >= 2")
        if self.custom is None:
            try:
                suite_entry(self.suite)
            except KeyError as exc:
                raise ConfigError(exc.args[0]) from None

    def stream(self, seed: int) -> tuple[DriftSchedule, StreamConfig]:
        schedule, scfg = self.custom if self.custom is not None else suite_entry(self.suite)
        scfg = replace(scfg, seed=seed)
        if self.num_frames is not None:
            scfg = replace(scfg, num_frames=self.num_frames)
        return schedule, scfg

    def to_dict(self) -> dict:
        out = {_TRACKER_KEYS[k]: v for k, v in asdict(self.tracker).items()}
        out.update(
            suite=self.suite,
            seeds=list(self.seeds),
            false_alarm_window=self.false_alarm_window,
            recovery_window=self.recovery_window,
            entropy_every=self.entropy_every,
            num_frames=self.num_frames,
            output=self.output,
        )
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        inverse = {v: k for k, v in _TRACKER_KEYS.items()}
        tracker_kw = {inverse[k]: d.pop(k) for k in list(d) if k in inverse}
        own = {f.name for f in fields(cls)} - {"tracker", "custom"}
        unknown = sorted(set(d) - own)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            tracker = TrackerConfig(**tracker_kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid tracker settings: {exc}") from None
        if "seeds" in d:
            seeds = d["seeds"]
            d["seeds"] = tuple(range(seeds)) if isinstance(seeds, int) else tuple(seeds)
        return cls(tracker=tracker, **d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class SeedResult:
    seed: int
    frames: int
    accuracy: float
    mean_max_score: float
    updates_performed: int
    update_ratio: float
    alarms: int
    detection_delay_mean: Optional[float]  # None when no event was detected
    missed_events: int
    false_alarms: int
    recovery_accuracy: Optional[float]  # None when no mode returns
    entropy_trace: tuple[tuple[int, float, float, float], ...] = ()


METRICS = (
    "accuracy",
    "mean_max_score",
    "updates_performed",
    "update_ratio",
    "alarms",
    "detection_delay_mean",
    "missed_events",
    "false_alarms",
    "recovery_accuracy",
)


def _present(values) -> list[float]:
    return [float(x) for x in values if x is not None]


def _mean_std(values: Sequence[Optional[float]]) -> tuple[float, float]:
    v = np.asarray(_present(values), dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    # sort first so the reduction does not depend on seed order
    v = np.sort(v)
    std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return float(np.mean(v)), std


@dataclass(frozen=True)
class Report:
    config: dict
    per_seed: tuple[SeedResult, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "per_seed", tuple(sorted(self.per_seed, key=lambda r: r.seed)))

    @property
    def aggregate(self) -> dict[str, tuple[float, float]]:
        return {m: _mean_std([getattr(r, m) for r in self.per_seed]) for m in METRICS}

    def mean(self, metric: str) -> float:
        return self.aggregate[metric][0]

    def stderr(self, metric: str) -> float:
        vals = _present(getattr(r, metric) for r in self.per_seed)
        if len(vals) < 2:
            return 0.0
        return self.aggregate[metric][1] / math.sqrt(len(vals))

    # -- serialisation --------------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.config,
                "per_seed": [asdict(r) for r in self.per_seed],
                "aggregate": {m: list(v) for m, v in self.aggregate.items()},
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        return cls(d["config"], tuple(_seed_result(r) for r in d["per_seed"]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")
        names = [f.name for f in fields(SeedResult)]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names)
        for r in self.per_seed:
            row = []
            for n in names:
                v = getattr(r, n)
                if n == "entropy_trace":
                    row.append(json.dumps([list(t) for t in v]))
                else:
                    row.append("" if v is None else repr(v))
            writer.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Report":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# config: "):
            raise ValueError("missing config line")
        config = json.loads(lines[0][len("# config: "):])
        out = []
        for row in csv.DictReader(lines[1:]):
            rec = {k: (None if v == "" else float(v)) for k, v in row.items() if k != "entropy_trace"}
            rec["entropy_trace"] = json.loads(row["entropy_trace"])
            out.append(_seed_result(rec))
        return cls(config, tuple(out))

    def write(self, path, fmt: str = "json") -> None:
        text = self.to_csv() if fmt == "csv" else self.to_json()
        Path(path).write_text(text, encoding="utf-8")


def _seed_result(d: dict) -> SeedResult:
    d = dict(d)
    d["entropy_trace"] = tuple((int(t[0]), float(t[1]), float(t[2]), float(t[3])) for t in d.get("entropy_trace", ()))
    for name in ("seed", "frames", "updates_performed", "alarms", "missed_events", "false_alarms"):
        d[name] = int(d[name])
    return SeedResult(**d)


# -- running --------------------------------------------------------------------------


def _event_metrics(alarms: list[int], events: list[int], n: int, window: int) -> tuple[Optional[float], int, int]:
    delays, missed = [], 0
    bounds = events[1:] + [n]
    for e, nxt in zip(events, bounds):
        hit = next((a for a in alarms if e <= a < nxt), None)
        if hit is None:
            missed += 1
        else:
            delays.append(hit - e)
    false = sum(1 for a in alarms if not any(e <= a < e + window for e in events))
    delay = float(np.mean(delays)) if delays else None
    return delay, missed, false


def run_seed(cfg: ExperimentConfig, seed: int) -> SeedResult:
    schedule, scfg = cfg.stream(seed)
    frames, events = gen_stream(schedule, scfg)
    state = tracker_init(frames[0], cfg.tracker)
    rng = np.random.default_rng([seed, 1])

    hits, scores, alarms, trace = [], [], [], []
    for frame in frames[1:]:
        res = state.step(frame, rng)
        hits.append(res.chosen_index == frame.true_index)
        scores.append(res.max_score)
        if res.alarm:
            alarms.append(frame.frame_index)
        if frame.frame_index % cfg.entropy_every == 0:
            buf = state.aux if state.aux is not None and len(state.aux) >= 2 else state.main
            h = buffer_entropy(buf, bandwidth=cfg.tracker.kde_bandwidth)
            trace.append((frame.frame_index, *h))

    n = len(frames)
    delay, missed, false = _event_metrics(alarms, [e for e, _ in events], n, cfg.false_alarm_window)
    recovered = [hits[t - 1] for r in schedule.returns() for t in range(r, min(r + cfg.recovery_window, n))]
    return SeedResult(
        seed=seed,
        frames=n,
        accuracy=float(np.mean(hits)),
        mean_max_score=float(np.mean(scores)),
        updates_performed=state.updates_performed,
        update_ratio=state.updates_performed / state.frames_seen,
        alarms=len(alarms),
        detection_delay_mean=delay,
        missed_events=missed,
        false_alarms=false,
        recovery_accuracy=float(np.mean(recovered)) if recovered else None,
        entropy_trace=tuple(trace),
    )


def _run_seed_args(args):
    return run_seed(*args)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> Report:
    """Run every seed of ``cfg``; seeds are independent, so ``workers > 1`` runs them in processes."""
    jobs = [(cfg, s) for s in cfg.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_seed_args, jobs))
    else:
        results = [run_seed(c, s) for c, s in jobs]
    return Report(cfg.to_dict(), tuple(results))


def run_ablation(base: ExperimentConfig, workers: int = 1) -> dict[tuple[str, str], Report]:
    """Every update policy crossed with every replacement strategy, keyed by ``(policy, replacement)``."""
    table = {}
    for policy in ABLATION_POLICIES:
        for repl in ABLATION_REPLACEMENTS:
            tracker = replace(base.tracker, update_policy=policy, replacement=repl)
            table[(policy, repl)] = run_experiment(replace(base, tracker=tracker), workers=workers)
    return table


def ablation_rows(table: dict[tuple[str, str], Report]) -> list[dict]:
    """One row per policy, one mean/std column pair per replacement strategy."""
    rows = []
    for policy in ABLATION_POLICIES:
        row = {"policy": POLICY_LABELS.get(policy, policy)}
        for repl in ABLATION_REPLACEMENTS:
            rep = table.get((policy, repl))
            if rep is None:
                continue
            mean, std = rep.aggregate["accuracy"]
            label = REPLACEMENT_LABELS[repl]
            row[label] = mean
            row[label + " std"] = std
            row[label + " updates"] = rep.mean("updates_performed")
        rows.append(row)
    return rows


def ablation_csv(table: dict[tuple[str, str], Report], seeds: int) -> str:
    rows = ablation_rows(table)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["policy", "seeds", *[k for k in rows[0] if k != "policy"]], lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({**row, "seeds": seeds})
    return buf.getvalue()
