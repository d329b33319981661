"""Page-Hinkley change detector over the per-frame maximum classifier score.

The detector accumulates deviations of each score from the running mean and
raises an alarm when the accumulated statistic rises more than ``lambda_``
above its running minimum.  With the default one-sided configuration only
*decreases* of the score are flagged, which is how drift shows up when an
outdated model starts to score the object poorly.

    mean_t = mean_{t-1} + (x_t - mean_{t-1}) / t
    m_t    = m_{t-1} + (mean_t - x_t - delta)
    M_t    = min(M_{t-1}, m_t)
    alarm  = m_t - M_t > lambda_

The detector resets itself on alarm so every retraining starts a fresh
monitoring epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class RejectedObservation(ValueError):
    """Raised when a non-finite score is offered to the detector."""


@dataclass
class PageHinkley:
    lambda_: float = 0.15
    delta: float = 0.005
    two_sided: bool = False
    reset_on_alarm: bool = True

    t: int = 0
    running_mean: float = 0.0
    cumulative_m: float = 0.0
    extremum_m: float = 0.0
    alarms_raised: int = 0
    # mirror statistic for increases, only used when two_sided
    cumulative_up: float = 0.0
    extremum_up: float = 0.0

    def __post_init__(self) -> None:
        if not self.lambda_ > 0:
            raise ValueError(f"lambda_ must be > 0, got {self.lambda_}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")

    @property
    def statistic(self) -> float:
        """Current PH statistic for decreases (always >= 0)."""
        return self.cumulative_m - self.extremum_m

    def observe(self, score: float) -> bool:
        """Feed one score; return True if a drift alarm fires on this frame."""
        x = float(score)
        if not math.isfinite(x):
            raise RejectedObservation(f"non-finite score: {score!r}")

        self.t += 1
        self.running_mean += (x - self.running_mean) / self.t
        self.cumulative_m += self.running_mean - x - self.delta
        if self.cumulative_m < self.extremum_m:
            self.extremum_m = self.cumulative_m
        alarm = self.cumulative_m - self.extremum_m > self.lambda_

        if self.two_sided:
            self.cumulative_up += x - self.running_mean - self.delta
            if self.cumulative_up < self.extremum_up:
                self.extremum_up = self.cumulative_up
            alarm = alarm or self.cumulative_up - self.extremum_up > self.lambda_

        if alarm:
            self.alarms_raised += 1
            if self.reset_on_alarm:
                self.reset()
        return alarm

    def reset(self) -> PageHinkley:
        """Clear the running statistics; ``alarms_raised`` is kept."""
        self.t = 0
        self.running_mean = 0.0
        self.cumulative_m = 0.0
        self.extremum_m = 0.0
        self.cumulative_up = 0.0
        self.extremum_up = 0.0
        return self


def ph_observe(state: PageHinkley, score: float) -> tuple[PageHinkley, bool]:
    alarm = state.observe(score)
    return state, alarm


def ph_reset(state: PageHinkley) -> PageHinkley:
    return state.reset()
