"""Place-visit counting and visit-driven growth of the PD gains."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import ControllerGains


@dataclass
class VisitMap:
    """Visit counts on a uniform square grid."""

    cell_size: float = 0.5
    counts: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")

    def cell_of(self, position: Sequence[float]) -> tuple[int, int]:
        x, y = position
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite position {position!r}")
        return math.floor(x / self.cell_size), math.floor(y / self.cell_size)

    def record_visit(self, position: Sequence[float]) -> int:
        cell = self.cell_of(position)
        n = self.counts.get(cell, 0) + 1
        self.counts[cell] = n
        return n

    def count(self, position: Sequence[float]) -> int:
        return self.counts.get(self.cell_of(position), 0)


@dataclass(frozen=True)
class GainSchedule:
    """Initial and saturation gains plus the per-visit increment rule.

    In stochastic mode each visit adds ``increment_scale * U`` to k_p and
    ``increment_scale_d * U'`` to k_d with independent uniform draws. Setting
    ``deterministic_increment`` to a ``(dk_p, dk_d)`` pair replaces the draws
    with fixed increments.
    """

    k_po: float = 2.5
    k_do: float = 0.5
    k_ps: float = 9.0
    k_ds: float = 5.0
    increment_scale: float = 0.225
    increment_scale_d: float = 0.2
    deterministic_increment: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if not self.k_po > self.k_do:
            raise ValueError(f"k_po must exceed k_do (got k_po={self.k_po}, k_do={self.k_do})")
        if self.k_ps < self.k_po:
            raise ValueError("saturation k_ps must be >= initial k_po")
        if self.k_ds < self.k_do:
            raise ValueError("saturation k_ds must be >= initial k_do")
        if not (self.increment_scale > 0 and self.increment_scale_d > 0):
            raise ValueError("increment scales must be positive")
        if self.deterministic_increment is not None:
            dp, dd = self.deterministic_increment
            if dp < 0 or dd < 0:
                raise ValueError("deterministic increments must be non-negative")

    @property
    def initial(self) -> ControllerGains:
        return ControllerGains(self.k_po, self.k_do)

    @property
    def saturation(self) -> ControllerGains:
        return ControllerGains(self.k_ps, self.k_ds)

    def closed_form(self, n: int) -> ControllerGains:
        """Gains after ``n`` visits in deterministic mode."""
        if self.deterministic_increment is None:
            raise ValueError("closed form only exists in deterministic mode")
        dp, dd = self.deterministic_increment
        return ControllerGains(min(self.k_po + dp * n, self.k_ps), min(self.k_do + dd * n, self.k_ds))


def _uniform_open(rng: np.random.Generator) -> float:
    while True:
        u = float(rng.random())
        if u > 0.0:
            return u


def adapted_gains(schedule: GainSchedule, prior: ControllerGains,
                  rng: np.random.Generator | None = None) -> ControllerGains:
    """Gains after one more visit, saturating at (k_ps, k_ds)."""
    if schedule.deterministic_increment is not None:
        dp, dd = schedule.deterministic_increment
    else:
        if rng is None:
            raise ValueError("stochastic gain schedule needs a random generator")
        dp = schedule.increment_scale * _uniform_open(rng)
        dd = schedule.increment_scale_d * _uniform_open(rng)
    return ControllerGains(min(prior.k_p + dp, schedule.k_ps), min(prior.k_d + dd, schedule.k_ds))


def gain_trajectory(schedule: GainSchedule, visits: int,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """Array of shape (visits + 1, 2) with (k_p, k_d) after 0..visits visits."""
    out = np.empty((visits + 1, 2))
    g = schedule.initial
    out[0] = g.k_p, g.k_d
    for n in range(1, visits + 1):
        g = adapted_gains(schedule, g, rng)
        out[n] = g.k_p, g.k_d
    return out


def group_gains(k_p: Sequence[float], k_d: Sequence[float]) -> tuple[float, float]:
    """Group gains: arithmetic means of the three robots' gains."""
    if len(k_p) != 3 or len(k_d) != 3:
        raise ValueError("group gains are defined for exactly three robots")
    return math.fsum(k_p) / 3, math.fsum(k_d) / 3
