"""Online linear foreground/background scorer.

The model minimises the ridge objective

    L(w, b) = sum_pos (w.x + b - 1)^2 + sum_neg (w.x + b)^2 + reg_lambda * |w|^2

with a fixed number of steepest-descent iterations per call.  Because L is
quadratic, each step uses the exact minimiser along the negative gradient, so
the loss never increases.  Training is warm-started from the current weights,
which is what makes the choice of *when* to train matter.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class TrainingBatch:
    positives: np.ndarray
    negatives: np.ndarray

    def __post_init__(self) -> None:
        pos = np.atleast_2d(np.asarray(self.positives, dtype=float))
        neg = np.asarray(self.negatives, dtype=float)
        if pos.shape[0] == 0 or pos.size == 0:
            raise ValueError("a training batch needs at least one positive")
        if neg.size == 0:
            neg = neg.reshape(0, pos.shape[1])
        neg = np.atleast_2d(neg)
        if neg.shape[1] != pos.shape[1]:
            raise ValueError(f"dimension mismatch: positives {pos.shape[1]}, negatives {neg.shape[1]}")
        object.__setattr__(self, "positives", pos)
        object.__setattr__(self, "negatives", neg)

    @property
    def dim(self) -> int:
        return self.positives.shape[1]

    @classmethod
    def from_samples(cls, samples: Sequence) -> "TrainingBatch":
        """Foreground features as positives, bundled background features as negatives."""
        pos = np.stack([s.features for s in samples])
        neg = np.concatenate([s.background_features for s in samples], axis=0)
        return cls(pos, neg)


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float = 0.0
    reg_lambda: float = 0.1
    steps: int = 10
    fit_bias: bool = True

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if self.reg_lambda < 0:
            raise ValueError(f"reg_lambda must be >= 0, got {self.reg_lambda}")
        if self.steps <= 0:
            raise ValueError(f"steps must be > 0, got {self.steps}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @classmethod
    def zeros(cls, dim: int, **kwargs) -> "LinearModel":
        return cls(np.zeros(dim), **kwargs)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def _check_dim(self, d: int) -> None:
        if d != self.dim:
            raise ValueError(f"dimension mismatch: model has {self.dim}, input has {d}")

    def raw(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check_dim(x.shape[-1])
        return x @ self.weights + self.bias

    def score(self, feature) -> float:
        return float(np.clip(self.raw(feature), 0.0, 1.0))

    def score_candidates(self, candidates) -> tuple[np.ndarray, int, float]:
        """Clamped scores, argmax index (lowest index on ties), and max score.

        The argmax is taken on the pre-clamp outputs so that candidates which
        both saturate at 1 are still ranked.
        """
        x = np.atleast_2d(np.asarray(candidates, dtype=float))
        if x.shape[0] == 0 or x.size == 0:
            raise ValueError("score_candidates needs at least one candidate")
        raw = self.raw(x)
        idx = int(np.argmax(raw))
        scores = np.clip(raw, 0.0, 1.0)
        return scores, idx, float(scores[idx])

    def train(self, batch: TrainingBatch, steps: int | None = None) -> "LinearModel":
        self._check_dim(batch.dim)
        theta, gram, rhs = _normal_equations(self, batch)
        for _ in range(self.steps if steps is None else steps):
            g = 2.0 * (gram @ theta - rhs)
            gg = g @ g
            if gg == 0.0:
                break
            curv = 2.0 * (g @ (gram @ g))
            if curv <= 0.0:
                break
            theta = theta - (gg / curv) * g
        if self.fit_bias:
            return replace(self, weights=theta[:-1].copy(), bias=float(theta[-1]))
        return replace(self, weights=theta.copy())


def _design(model: LinearModel, batch: TrainingBatch) -> tuple[np.ndarray, np.ndarray]:
    x = np.concatenate([batch.positives, batch.negatives], axis=0)
    y = np.concatenate([np.ones(batch.positives.shape[0]), np.zeros(batch.negatives.shape[0])])
    if model.fit_bias:
        x = np.hstack([x, np.ones((x.shape[0], 1))])
    else:
        y = y - model.bias
    return x, y


def _normal_equations(model: LinearModel, batch: TrainingBatch):
    x, y = _design(model, batch)
    gram = x.T @ x
    d = model.dim
    gram[np.arange(d), np.arange(d)] += model.reg_lambda
    rhs = x.T @ y
    theta = np.append(model.weights, model.bias) if model.fit_bias else model.weights.copy()
    return theta, gram, rhs


def loss(model: LinearModel, batch: TrainingBatch) -> float:
    model._check_dim(batch.dim)
    r_pos = batch.positives @ model.weights + model.bias - 1.0
    r_neg = batch.negatives @ model.weights + model.bias
    return float(r_pos @ r_pos + r_neg @ r_neg + model.reg_lambda * (model.weights @ model.weights))


def gradient(model: LinearModel, batch: TrainingBatch) -> tuple[np.ndarray, float]:
    """Analytic gradient of :func:`loss` with respect to ``(weights, bias)``."""
    model._check_dim(batch.dim)
    r_pos = batch.positives @ model.weights + model.bias - 1.0
    r_neg = batch.negatives @ model.weights + model.bias
    gw = 2.0 * (batch.positives.T @ r_pos + batch.negatives.T @ r_neg) + 2.0 * model.reg_lambda * model.weights
    gb = 2.0 * (r_pos.sum() + r_neg.sum())
    return gw, float(gb)


def train(model: LinearModel, batch: TrainingBatch) -> LinearModel:
    return model.train(batch)


def score(model: LinearModel, feature) -> float:
    return model.score(feature)


def score_candidates(model: LinearModel, candidates) -> tuple[np.ndarray, int, float]:
    return model.score_candidates(candidates)
