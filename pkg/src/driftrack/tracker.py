"""Adaptive tracking loop: score, localize, gate memory insertion, retrain.

Samples enter the main memory on every frame that passes the ``tau`` gate.
The update policy only decides on which frames the classifier is retrained.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .change_detection import PageHinkley
from .classifier import LinearModel, TrainingBatch
from .memory import (
    AuxiliaryMemory,
    DiscretizationConfig,
    MainMemory,
    Replacement,
    TemplateSample,
    assemble_batch,
    discretize_score,
)
from .simulator import Frame


@dataclass(frozen=True)
class EveryFrame:
    def __str__(self) -> str:
        return "every_frame"


@dataclass(frozen=True)
class Periodic:
    k: int

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise ValueError(f"period must be > 0, got {self.k}")

    def __str__(self) -> str:
        return f"periodic:{self.k}"


@dataclass(frozen=True)
class RandomUpdate:
    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"update probability must lie in [0, 1], got {self.p}")

    def __str__(self) -> str:
        return f"random:{self.p:g}"


@dataclass
class OnChange:
    detector: PageHinkley = field(default_factory=PageHinkley)

    def __str__(self) -> str:
        return "on_change"


UpdatePolicy = Union[EveryFrame, Periodic, RandomUpdate, OnChange]


@dataclass(frozen=True)
class TrackerConfig:
    # change detection
    lambda_: float = 0.15
    delta: float = 0.005
    two_sided: bool = False
    # memories
    budget_main: int = 50
    budget_aux: int = 50
    tau: float = 0.25
    num_labels: int = 10
    replacement: str = "score_discretized"
    kde_bandwidth: Optional[float] = None
    aux_draw_n: int = 10
    # classifier
    reg_lambda: float = 0.1
    train_steps: int = 10
    init_train_steps: int = 20
    # policy
    update_policy: str = "on_change"

    def __post_init__(self) -> None:
        Replacement(self.replacement)
        parse_policy(self.update_policy, self)
        DiscretizationConfig(self.tau, self.num_labels)
        if self.aux_draw_n < 0:
            raise ValueError("aux_draw_n must be >= 0")
        if not self.lambda_ > 0 or self.delta < 0:
            raise ValueError("change detection needs lambda > 0 and delta >= 0")
        if self.budget_main <= 0 or self.budget_aux <= 0:
            raise ValueError("memory budgets must be > 0")
        if self.train_steps <= 0 or self.init_train_steps <= 0 or self.reg_lambda < 0:
            raise ValueError("training needs positive step counts and reg_lambda >= 0")
        if self.kde_bandwidth is not None and not self.kde_bandwidth > 0:
            raise ValueError("kde_bandwidth must be > 0 when given")

    @property
    def discretization(self) -> DiscretizationConfig:
        return DiscretizationConfig(self.tau, self.num_labels)


def parse_policy(text: str, cfg: Optional[TrackerConfig] = None) -> UpdatePolicy:
    """Parse ``every_frame``, ``periodic:k``, ``random:p`` or ``on_change``."""
    name, _, arg = str(text).partition(":")
    name = name.strip().lower()
    try:
        if name == "every_frame" and not arg:
            return EveryFrame()
        if name == "periodic":
            return Periodic(int(arg))
        if name == "random":
            return RandomUpdate(float(arg))
        if name == "on_change" and not arg:
            if cfg is None:
                return OnChange(PageHinkley())
            return OnChange(PageHinkley(lambda_=cfg.lambda_, delta=cfg.delta, two_sided=cfg.two_sided))
    except ValueError as exc:
        raise ValueError(f"bad update policy {text!r}: {exc}") from None
    raise ValueError(f"bad update policy {text!r}; expected every_frame, periodic:k, random:p or on_change")


@dataclass(frozen=True)
class StepResult:
    chosen_index: int
    max_score: float
    inserted: bool
    evicted_to_aux: bool
    retrained: bool
    alarm: bool


@dataclass
class TrackerState:
    model: LinearModel
    main: MainMemory
    aux: Optional[AuxiliaryMemory]
    policy: UpdatePolicy
    cfg: TrackerConfig
    frames_seen: int = 0
    updates_performed: int = 0
    alarms: int = 0
    pinned: Optional[TemplateSample] = None

    def step(self, frame: Frame, rng: np.random.Generator) -> StepResult:
        cands = np.asarray(frame.candidates, dtype=float)
        if cands.ndim != 2 or cands.shape[1] != self.model.dim:
            raise ValueError(f"dimension mismatch: model has {self.model.dim}, frame has {cands.shape[-1]}")
        _, idx, max_score = self.model.score_candidates(cands)
        self.frames_seen += 1

        alarm = False
        policy = self.policy
        if isinstance(policy, EveryFrame):
            fired = True
        elif isinstance(policy, Periodic):
            fired = self.frames_seen % policy.k == 0
        elif isinstance(policy, RandomUpdate):
            fired = bool(rng.random() < policy.p)
        else:
            alarm = policy.detector.observe(max_score)
            fired = alarm
        if alarm:
            self.alarms += 1

        inserted = evicted_to_aux = False
        label = discretize_score(max_score, self.cfg.discretization)
        if label is not None:
            sample = TemplateSample(
                features=cands[idx],
                background_features=np.delete(cands, idx, axis=0),
                score=max_score,
                label=label,
                frame_index=frame.frame_index,
            )
            evicted = self.main.push(sample)
            inserted = True
            if evicted is not None and self.aux is not None:
                if evicted is self.pinned and not self.aux.full:
                    self.aux.entries.append(evicted)
                else:
                    self.aux.insert(evicted, rng)
                evicted_to_aux = True

        if fired:
            batch = assemble_batch(self.main, self.aux, self.cfg.aux_draw_n, rng)
            self.model = self.model.train(TrainingBatch.from_samples(batch))
            self.updates_performed += 1

        return StepResult(idx, max_score, inserted, evicted_to_aux, fired, alarm)


def tracker_init(first_frame: Frame, cfg: TrackerConfig) -> TrackerState:
    """Train on the ground-truth object of the first frame and seed the main memory."""
    cands = np.asarray(first_frame.candidates, dtype=float)
    if cands.ndim != 2 or not 0 <= first_frame.true_index < cands.shape[0]:
        raise ValueError("first frame must carry candidates and a valid ground-truth index")
    disc = cfg.discretization
    gt = TemplateSample(
        features=cands[first_frame.true_index],
        background_features=np.delete(cands, first_frame.true_index, axis=0),
        score=1.0,
        label=discretize_score(1.0, disc),
        frame_index=first_frame.frame_index,
    )
    model = LinearModel.zeros(cands.shape[1], reg_lambda=cfg.reg_lambda, steps=cfg.train_steps)
    model = model.train(TrainingBatch.from_samples([gt]), steps=cfg.init_train_steps)
    main = MainMemory(cfg.budget_main)
    main.push(gt)
    aux = None
    if Replacement(cfg.replacement) is not Replacement.NONE:
        aux = AuxiliaryMemory(cfg.budget_aux, Replacement(cfg.replacement))
    return TrackerState(
        model=model,
        main=main,
        aux=aux,
        policy=parse_policy(cfg.update_policy, cfg),
        cfg=cfg,
        frames_seen=1,
        updates_performed=1,
        pinned=gt,
    )


def tracker_step(state: TrackerState, frame: Frame, rng: np.random.Generator) -> tuple[TrackerState, StepResult]:
    result = state.step(frame, rng)
    return state, result
