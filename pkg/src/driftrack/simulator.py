"""Synthetic feature streams with ground-truth drift events.

Each frame offers one object candidate and ``num_distractors`` background
candidates.  The object is drawn around the current appearance mode plus a
shared identity vector that every mode of the object carries; distractors are
drawn around the appearance of *other* modes without that identity vector.  A
model fitted to one appearance therefore still ranks a drifted object above
most clutter, but with a lower score, and a stale model can confuse the
object with clutter that looks like an appearance it has learned.

Segment transitions:

``abrupt``       the mean switches at the boundary.
``incremental``  the mean is interpolated linearly over ``window`` frames.
``gradual``      each frame is drawn from the old or the new mode, with the
                 probability of the new mode rising linearly over ``window``.

Recurrent drift is a schedule that revisits a mode id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

ABRUPT, INCREMENTAL, GRADUAL = "abrupt", "incremental", "gradual"
TRANSITIONS = (ABRUPT, INCREMENTAL, GRADUAL)


@dataclass(frozen=True)
class Mode:
    mean: np.ndarray
    scale: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        if not self.scale > 0:
            raise ValueError(f"mode scale must be > 0, got {self.scale}")


@dataclass(frozen=True)
class Segment:
    mode_id: int
    length: int
    transition: str = ABRUPT
    window: int = 0

    def __post_init__(self) -> None:
        if self.length <= 0:
            raise ValueError(f"segment length must be > 0, got {self.length}")
        if self.transition not in TRANSITIONS:
            raise ValueError(f"unknown transition {self.transition!r}")
        if self.transition != ABRUPT and not 0 < self.window <= self.length:
            raise ValueError(f"{self.transition} window must be in (0, length], got {self.window}")


@dataclass(frozen=True)
class DriftSchedule:
    segments: tuple[Segment, ...]
    modes: dict[int, Mode]
    identity: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("empty schedule")
        for seg in self.segments:
            if seg.mode_id not in self.modes:
                raise ValueError(f"segment references unknown mode {seg.mode_id}")
        if len(self.modes) < 2:
            raise ValueError("at least two modes are needed so distractors have somewhere to come from")
        dims = {m.mean.shape[0] for m in self.modes.values()}
        if len(dims) != 1:
            raise ValueError(f"modes disagree on dimension: {sorted(dims)}")
        if self.identity is not None:
            ident = np.asarray(self.identity, dtype=float)
            if ident.shape != (self.dim,):
                raise ValueError("identity vector has the wrong dimension")
            object.__setattr__(self, "identity", ident)

    @property
    def dim(self) -> int:
        return next(iter(self.modes.values())).mean.shape[0]

    @property
    def total_frames(self) -> int:
        return sum(s.length for s in self.segments)

    def boundaries(self) -> list[tuple[int, str]]:
        out, start = [], 0
        for i, seg in enumerate(self.segments):
            if i > 0:
                out.append((start, seg.transition))
            start += seg.length
        return out

    def returns(self) -> list[int]:
        """Frame indices where a previously visited mode comes back."""
        seen, out, start = set(), [], 0
        for i, seg in enumerate(self.segments):
            if i > 0 and seg.mode_id in seen and seg.mode_id != self.segments[i - 1].mode_id:
                out.append(start)
            seen.add(seg.mode_id)
            start += seg.length
        return out


@dataclass(frozen=True)
class StreamConfig:
    d: int = 16
    num_distractors: int = 4
    noise_sigma: float = 0.05
    distractor_sigma: Optional[float] = None  # None: same as noise_sigma
    pseudo_label_noise_p: float = 0.0
    mode_jitter: float = 0.0  # object spread along the appearance directions of the other modes
    seed: int = 0
    num_frames: Optional[int] = None  # None: schedule length; longer repeats the last segment

    def __post_init__(self) -> None:
        if self.num_distractors < 1:
            raise ValueError("num_distractors must be >= 1")
        if self.noise_sigma < 0 or (self.distractor_sigma is not None and self.distractor_sigma < 0):
            raise ValueError("noise levels must be >= 0")
        if not 0.0 <= self.pseudo_label_noise_p <= 1.0:
            raise ValueError("pseudo_label_noise_p must lie in [0, 1]")


@dataclass(frozen=True)
class Frame:
    frame_index: int
    candidates: np.ndarray
    true_index: int
    is_ground_truth: bool = False
    object_mode: int = -1
    corrupted: bool = False

    @property
    def object_features(self) -> np.ndarray:
        return self.candidates[self.true_index]


def _object_state(schedule: DriftSchedule, t: int, rng: np.random.Generator):
    """(mean, scale, modes in play, drawn mode) for the object at frame ``t``."""
    start = 0
    prev = None
    for seg in schedule.segments:
        if t < start + seg.length or seg is schedule.segments[-1]:
            break
        prev = seg
        start += seg.length
    cur = schedule.modes[seg.mode_id]
    offset = t - start
    if prev is None or seg.transition == ABRUPT or offset >= seg.window:
        return cur.mean, cur.scale, {seg.mode_id}, seg.mode_id
    old = schedule.modes[prev.mode_id]
    frac = (offset + 1) / (seg.window + 1)
    in_play = {seg.mode_id, prev.mode_id}
    if seg.transition == INCREMENTAL:
        mean = (1.0 - frac) * old.mean + frac * cur.mean
        scale = (1.0 - frac) * old.scale + frac * cur.scale
        drawn = seg.mode_id if frac >= 0.5 else prev.mode_id
        return mean, scale, in_play, drawn
    if rng.random() < frac:
        return cur.mean, cur.scale, in_play, seg.mode_id
    return old.mean, old.scale, in_play, prev.mode_id


def gen_stream(schedule: DriftSchedule, cfg: StreamConfig) -> tuple[list[Frame], list[tuple[int, str]]]:
    """Generate frames and the ground-truth event log ``[(frame_index, kind), ...]``."""
    if schedule.dim != cfg.d:
        raise ValueError(f"schedule dimension {schedule.dim} != config d={cfg.d}")
    rng = np.random.default_rng(cfg.seed)
    n = schedule.total_frames if cfg.num_frames is None else cfg.num_frames
    identity = schedule.identity if schedule.identity is not None else np.zeros(cfg.d)
    mode_ids = sorted(schedule.modes)
    clutter_sigma = cfg.noise_sigma if cfg.distractor_sigma is None else cfg.distractor_sigma
    frames = []
    for t in range(n):
        mean, scale, in_play, drawn = _object_state(schedule, t, rng)
        obj = identity + mean + rng.normal(0.0, scale * cfg.noise_sigma, cfg.d)
        if cfg.mode_jitter > 0:
            for m in mode_ids:
                if m != drawn:
                    obj = obj + rng.normal(0.0, cfg.mode_jitter) * schedule.modes[m].mean

        others = [m for m in mode_ids if m not in in_play]
        if not others:
            others = [m for m in mode_ids if m != drawn]
        picks = rng.integers(len(others), size=cfg.num_distractors)
        distractors = []
        for i in picks:
            mode = schedule.modes[others[i]]
            distractors.append(mode.mean + rng.normal(0.0, mode.scale * clutter_sigma, cfg.d))

        corrupted = t > 0 and rng.random() < cfg.pseudo_label_noise_p
        if corrupted:
            mode = schedule.modes[others[int(rng.integers(len(others)))]]
            obj = mode.mean + rng.normal(0.0, mode.scale * clutter_sigma, cfg.d)

        true_index = int(rng.integers(cfg.num_distractors + 1))
        distractors.insert(true_index, obj)
        frames.append(
            Frame(
                frame_index=t,
                candidates=np.stack(distractors),
                true_index=true_index,
                is_ground_truth=(t == 0),
                object_mode=drawn,
                corrupted=corrupted,
            )
        )
    events = [(b, kind) for b, kind in schedule.boundaries() if b < n]
    return frames, events


# -- line-delimited export ----------------------------------------------------------------


def frame_to_record(frame: Frame) -> dict:
    return {
        "index": frame.frame_index,
        "candidates": frame.candidates.tolist(),
        "true_index": frame.true_index,
        "is_ground_truth": frame.is_ground_truth,
    }


def frame_from_record(rec: dict) -> Frame:
    return Frame(
        frame_index=int(rec["index"]),
        candidates=np.asarray(rec["candidates"], dtype=float),
        true_index=int(rec["true_index"]),
        is_ground_truth=bool(rec.get("is_ground_truth", rec["index"] == 0)),
    )


def write_stream(frames: Iterable[Frame], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(json.dumps(frame_to_record(frame), separators=(",", ":")))
            fh.write("\n")


def read_stream(path) -> list[Frame]:
    with open(path, encoding="utf-8") as fh:
        return [frame_from_record(json.loads(line)) for line in fh if line.strip()]


# -- standard benchmark suite ----------------------------------------------------------------

SUITE_VERSION = 1
SUITE_DIM = 16
NUM_MODES = 5  # object appearances
NUM_BACKGROUND_MODES = 10  # clutter-only appearances
IDENTITY_NORM = 1.2
APPEARANCE_NORM = 1.0
SEGMENT = 100
WINDOW = 30
SUITE_STREAM = StreamConfig(
    d=SUITE_DIM,
    num_distractors=8,
    noise_sigma=0.02,
    distractor_sigma=0.175,
    mode_jitter=0.35,
)


def suite_modes(seed: int = 20240101) -> tuple[dict[int, Mode], np.ndarray]:
    """Orthonormal appearance directions plus one identity direction.

    Ids ``0 .. NUM_MODES-1`` are object appearances; the remaining ids only
    ever show up as clutter.
    """
    rng = np.random.default_rng(seed)
    total = NUM_MODES + NUM_BACKGROUND_MODES
    if total + 1 > SUITE_DIM:
        raise ValueError("not enough dimensions for orthogonal modes")
    q, _ = np.linalg.qr(rng.normal(size=(SUITE_DIM, total + 1)))
    identity = IDENTITY_NORM * q[:, 0]
    modes = {m: Mode(APPEARANCE_NORM * q[:, m + 1], 1.0) for m in range(total)}
    return modes, identity


def _schedule(mode_seq: Sequence[int], transition: str = ABRUPT, length: int = SEGMENT, window: int = WINDOW):
    modes, identity = suite_modes()
    segs = [Segment(m, length, transition if i else ABRUPT, window if (i and transition != ABRUPT) else 0)
            for i, m in enumerate(mode_seq)]
    return DriftSchedule(tuple(segs), modes, identity)


def standard_suite() -> list[tuple[str, DriftSchedule, StreamConfig]]:
    """Named benchmark entries; contents are a versioned constant (``SUITE_VERSION``).

    The stationary entries hold a single appearance without pose jitter and
    serve as the no-drift control.
    """
    base = SUITE_STREAM
    still = _with(base, mode_jitter=0.0, noise_sigma=STATIONARY_NOISE)
    walk = [0, 1, 2, 3]
    entries = [
        ("stationary", _schedule([0], length=6 * SEGMENT), still),
        ("stationary_noisy", _schedule([0], length=6 * SEGMENT), _with(still, noise_sigma=STATIONARY_NOISE_HIGH)),
        ("abrupt3", _schedule(walk), base),
        ("gradual", _schedule(walk, GRADUAL, length=150), base),
        ("incremental", _schedule(walk, INCREMENTAL, length=150), base),
        ("recurrent5", _schedule([0, 1, 2, 3, 4] * 3), base),
        ("abrupt3_noisy", _schedule(walk), _with(base, pseudo_label_noise_p=0.05)),
        ("recurrent5_noisy", _schedule([0, 1, 2, 3, 4] * 3), _with(base, pseudo_label_noise_p=0.05)),
    ]
    return entries


STATIONARY_NOISE = 0.01
STATIONARY_NOISE_HIGH = 0.015


def _with(cfg: StreamConfig, **kw) -> StreamConfig:
    from dataclasses import replace

    return replace(cfg, **kw)


def suite_entry(name: str) -> tuple[DriftSchedule, StreamConfig]:
    for entry_name, schedule, cfg in standard_suite():
        if entry_name == name:
            return schedule, cfg
    known = ", ".join(n for n, _, _ in standard_suite())
    raise KeyError(f"unknown suite entry {name!r} (known: {known})")
