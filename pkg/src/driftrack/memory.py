"""Template memories: a FIFO main memory and an entropy-maximizing replay buffer.

Samples enter the main memory every frame whose maximum classifier score
passes the acceptance threshold ``tau``.  Samples evicted from the main memory
are offered to the auxiliary buffer, which is filled in arrival order until it
reaches its budget and afterwards replaces entries according to one of three
strategies:

``random``
    uniformly random victim.
``density``
    victim drawn from the whole buffer with probability proportional to
    ``1 - d_i / max(d)``, where ``d_i`` is the distance to the nearest neighbour.
``score_discretized``
    the same density rule restricted to the entries carrying the majority
    score label, which also balances the label histogram.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

EPS = 1e-12


class Replacement(str, Enum):
    NONE = "none"
    RANDOM = "random"
    DENSITY = "density"
    SCORE_DISCRETIZED = "score_discretized"


@dataclass(frozen=True)
class DiscretizationConfig:
    tau: float = 0.25
    num_labels: int = 10

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"tau must lie in [0, 1), got {self.tau}")
        if self.num_labels < 2:
            raise ValueError(f"num_labels must be >= 2, got {self.num_labels}")


def discretize_score(score: float, cfg: DiscretizationConfig) -> Optional[int]:
    """Map a score above ``tau`` linearly onto ``num_labels`` bins.

    Returns ``None`` (rejection) when ``score <= tau``.
    """
    if not math.isfinite(score):
        raise ValueError(f"non-finite score: {score!r}")
    if score <= cfg.tau:
        return None
    label = int(math.floor((score - cfg.tau) / (1.0 - cfg.tau) * cfg.num_labels))
    return min(label, cfg.num_labels - 1)


@dataclass
class TemplateSample:
    features: np.ndarray
    background_features: np.ndarray
    score: float
    label: Optional[int]
    frame_index: int

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        bg = np.asarray(self.background_features, dtype=float)
        if bg.size == 0:
            bg = bg.reshape(0, self.features.shape[0])
        self.background_features = bg
        if self.features.ndim != 1:
            raise ValueError("features must be a 1-D vector")
        if bg.ndim != 2 or bg.shape[1] != self.features.shape[0]:
            raise ValueError(
                f"background features must have shape (k, {self.features.shape[0]}), got {bg.shape}"
            )
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(bg))):
            raise ValueError("feature vectors must be finite")

    @property
    def dim(self) -> int:
        return self.features.shape[0]


@dataclass
class MainMemory:
    budget: int = 50
    entries: list[TemplateSample] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.budget <= 0:
            raise ValueError(f"budget must be > 0, got {self.budget}")

    def __len__(self) -> int:
        return len(self.entries)

    def push(self, sample: TemplateSample) -> Optional[TemplateSample]:
        """Append ``sample``; return the evicted oldest entry if over budget."""
        if self.entries and self.entries[0].dim != sample.dim:
            raise ValueError(f"dimension mismatch: memory holds {self.entries[0].dim}, got {sample.dim}")
        self.entries.append(sample)
        if len(self.entries) > self.budget:
            return self.entries.pop(0)
        return None


def main_push(mem: MainMemory, s: TemplateSample) -> tuple[MainMemory, Optional[TemplateSample]]:
    evicted = mem.push(s)
    return mem, evicted


def nearest_neighbor_distances(x: np.ndarray) -> np.ndarray:
    """Euclidean distance from each row of ``x`` to its nearest other row."""
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, np.inf)
    return np.sqrt(np.maximum(d2.min(axis=1), 0.0))


def replacement_weights(x: np.ndarray) -> np.ndarray:
    """Victim probabilities ``(1 - d_i/max d) / sum_j (1 - d_j/max d)``.

    Falls back to uniform when every weight vanishes.
    """
    m = x.shape[0]
    if m == 1:
        return np.ones(1)
    d = nearest_neighbor_distances(x)
    w = 1.0 - d / (d.max() + EPS)
    total = w.sum()
    if total <= 0.0:
        return np.full(m, 1.0 / m)
    return w / total


def majority_label(labels: Sequence[int], rng: np.random.Generator) -> int:
    counts = Counter(labels)
    top = max(counts.values())
    tied = sorted(lab for lab, c in counts.items() if c == top)
    if len(tied) == 1:
        return tied[0]
    return tied[int(rng.integers(len(tied)))]


@dataclass
class AuxiliaryMemory:
    budget: int = 50
    replacement: Replacement = Replacement.SCORE_DISCRETIZED
    entries: list[TemplateSample] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.budget <= 0:
            raise ValueError(f"budget must be > 0, got {self.budget}")
        self.replacement = Replacement(self.replacement)
        if self.replacement is Replacement.NONE:
            raise ValueError("an auxiliary memory needs a replacement strategy other than 'none'")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def full(self) -> bool:
        return len(self.entries) >= self.budget

    def _check(self, s: TemplateSample) -> None:
        if s.label is None:
            raise ValueError("auxiliary memory only accepts labelled samples")
        if self.entries and self.entries[0].dim != s.dim:
            raise ValueError(f"dimension mismatch: memory holds {self.entries[0].dim}, got {s.dim}")

    def victim_distribution(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Candidate indices and their replacement probabilities for a full buffer.

        ``rng`` is only consumed to break majority-label ties.
        """
        n = len(self.entries)
        if self.replacement is Replacement.RANDOM:
            return np.arange(n), np.full(n, 1.0 / n)
        if self.replacement is Replacement.DENSITY:
            cand = np.arange(n)
        else:
            labels = [e.label for e in self.entries]
            top = majority_label(labels, rng)
            cand = np.array([i for i, lab in enumerate(labels) if lab == top])
        x = np.stack([self.entries[i].features for i in cand])
        return cand, replacement_weights(x)

    def insert(self, s: TemplateSample, rng: np.random.Generator) -> Optional[int]:
        """Offer ``s``; return the replaced index, or None if it was appended."""
        self._check(s)
        if len(self.entries) < self.budget:
            self.entries.append(s)
            return None
        cand, p = self.victim_distribution(rng)
        if len(cand) == 1:
            victim = int(cand[0])
        else:
            victim = int(cand[rng.choice(len(cand), p=p)])
        self.entries[victim] = s
        return victim


def _insert_with(strategy: Replacement, aux: AuxiliaryMemory, s: TemplateSample, rng) -> AuxiliaryMemory:
    saved = aux.replacement
    aux.replacement = strategy
    try:
        aux.insert(s, rng)
    finally:
        aux.replacement = saved
    return aux


def aux_insert(aux: AuxiliaryMemory, s: TemplateSample, rng: np.random.Generator) -> AuxiliaryMemory:
    return _insert_with(Replacement.SCORE_DISCRETIZED, aux, s, rng)


def aux_insert_random(aux: AuxiliaryMemory, s: TemplateSample, rng: np.random.Generator) -> AuxiliaryMemory:
    return _insert_with(Replacement.RANDOM, aux, s, rng)


def aux_insert_density(aux: AuxiliaryMemory, s: TemplateSample, rng: np.random.Generator) -> AuxiliaryMemory:
    return _insert_with(Replacement.DENSITY, aux, s, rng)


def assemble_batch(
    main: MainMemory,
    aux: Optional[AuxiliaryMemory],
    n: int,
    rng: np.random.Generator,
) -> list[TemplateSample]:
    """All main-memory entries plus ``min(n, len(aux))`` distinct auxiliary entries."""
    batch = list(main.entries)
    if aux is None or n <= 0 or len(aux) == 0:
        return batch
    k = min(n, len(aux))
    picks = rng.choice(len(aux), size=k, replace=False)
    batch.extend(aux.entries[i] for i in picks)
    return batch


# -- density and entropy diagnostics -------------------------------------------------


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return x


def kde_density(points, query, bandwidth: float) -> float:
    """Gaussian KDE ``(1/M) sum_k K_h(query - x_k)`` with isotropic bandwidth ``h``."""
    x = _as_points(points)
    if x.shape[0] == 0:
        raise ValueError("kde_density needs at least one point")
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be > 0, got {bandwidth}")
    q = np.atleast_1d(np.asarray(query, dtype=float))
    if q.shape[0] != x.shape[1]:
        raise ValueError(f"query dimension {q.shape[0]} != point dimension {x.shape[1]}")
    d = x.shape[1]
    sq = np.sum((x - q) ** 2, axis=1)
    norm = (2.0 * math.pi * bandwidth**2) ** (-d / 2.0)
    return float(norm * np.mean(np.exp(-sq / (2.0 * bandwidth**2))))


def silverman_bandwidth(x: np.ndarray) -> float:
    n, d = x.shape
    sigma = float(np.mean(np.std(x, axis=0, ddof=1))) if n > 1 else 0.0
    if sigma <= 0.0:
        return 1.0
    return sigma * (4.0 / ((d + 2.0) * n)) ** (1.0 / (d + 4.0))


def _loo_log_density(x: np.ndarray, h: float) -> np.ndarray:
    m, d = x.shape
    sq = np.sum(x * x, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0)
    logk = -d2 / (2.0 * h * h)
    np.fill_diagonal(logk, -np.inf)
    log_norm = -0.5 * d * math.log(2.0 * math.pi * h * h)
    return logsumexp(logk, axis=1) - math.log(m - 1) + log_norm


def _discrete_entropy(counts) -> float:
    c = np.asarray(list(counts), dtype=float)
    p = c / c.sum()
    return float(-np.sum(p * np.log(p)))


def buffer_entropy(
    samples,
    bandwidth: Optional[float] = None,
    estimator: str = "kde",
) -> tuple[float, float, float]:
    """Return ``(H_Y, H_phi_given_Y, H_joint)`` for a labelled buffer, in nats.

    ``estimator="kde"`` uses leave-one-out Gaussian KDE per label (Silverman
    bandwidth over the whole buffer unless ``bandwidth`` is given); labels
    with a single member contribute 0.  ``estimator="discrete"`` treats
    feature vectors as symbols and uses plug-in frequencies.
    """
    entries = samples.entries if hasattr(samples, "entries") else list(samples)
    if not entries:
        raise ValueError("buffer_entropy needs a nonempty buffer")
    labels = [e.label for e in entries]
    if any(lab is None for lab in labels):
        raise ValueError("every buffer entry needs a label")
    counts = Counter(labels)
    n = len(entries)
    h_y = _discrete_entropy(counts.values())

    groups: dict[int, list[np.ndarray]] = {}
    for e in entries:
        groups.setdefault(e.label, []).append(e.features)

    h_cond = 0.0
    if estimator == "kde":
        h = bandwidth
        if h is None:
            h = silverman_bandwidth(np.stack([e.features for e in entries]))
        if not h > 0:
            raise ValueError(f"bandwidth must be > 0, got {h}")
        for lab, feats in groups.items():
            if len(feats) < 2:
                continue
            logp = _loo_log_density(np.stack(feats), h)
            h_cond += counts[lab] / n * float(-np.mean(logp))
    elif estimator == "discrete":
        for lab, feats in groups.items():
            sym = Counter(tuple(np.asarray(f).tolist()) for f in feats)
            h_cond += counts[lab] / n * _discrete_entropy(sym.values())
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    return h_y, h_cond, h_y + h_cond
