"""Valence calculus, experience-driven action probabilities and the response rule."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np


class ActionKind(str, Enum):
    SEARCH_LIGHT = "search_light"
    RESPOND_CALL = "respond_call"


@dataclass(frozen=True)
class Mood:
    """A single mood draw, strictly inside (0, 1)."""

    value: float

    def __post_init__(self) -> None:
        if not (0.0 < self.value < 1.0):
            raise ValueError(f"mood must lie in the open interval (0, 1), got {self.value!r}")

    def __float__(self) -> float:
        return self.value


class MoodSource:
    """Seeded mood generator owned by exactly one robot.

    Draws come from numpy's PCG64 bit generator; a draw of exactly 0.0 is
    rejected and redrawn so every mood is in the open interval (0, 1).
    """

    def __init__(self, seed: int | np.random.SeedSequence | np.random.Generator) -> None:
        if isinstance(seed, np.random.Generator):
            self._rng = seed
        else:
            self._rng = np.random.Generator(np.random.PCG64(seed))

    def draw(self) -> float:
        while True:
            value = float(self._rng.random())
            if value > 0.0:
                return value


@dataclass(frozen=True)
class ExperienceLedger:
    p_exp_light: float = 0.0
    p_exp_call: float = 0.0
    step: float = 1.0

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise ValueError("experience step must be positive")

    def get(self, kind: ActionKind) -> float:
        return self.p_exp_light if kind is ActionKind.SEARCH_LIGHT else self.p_exp_call


@dataclass(frozen=True)
class LearningParams:
    """Learning resolution and the response threshold.

    ``delta_l_call`` lets the respond-call rule use its own resolution;
    ``None`` means both action kinds share ``delta_l``.
    """

    delta_l: float = 0.1
    respond_threshold: float = 0.5
    delta_l_call: float | None = None

    def __post_init__(self) -> None:
        if not self.delta_l > 0:
            raise ValueError("delta_l must be positive")
        if self.delta_l_call is not None and not self.delta_l_call > 0:
            raise ValueError("delta_l_call must be positive")
        if not (0.0 < self.respond_threshold < 1.0):
            raise ValueError("respond_threshold must lie in (0, 1)")

    def resolution(self, kind: ActionKind = ActionKind.SEARCH_LIGHT) -> float:
        if kind is ActionKind.RESPOND_CALL and self.delta_l_call is not None:
            return self.delta_l_call
        return self.delta_l


@dataclass(frozen=True)
class ValenceInput:
    v_s: float = 0.0
    v_f: float = 0.0
    p_s: float = 1.0
    p_f: float = 0.0
    m_s: float = 1.0
    m_f: float = 1.0
    i_s: float = 1.0
    i_f: float = 1.0


def _check_probabilities(inp: ValenceInput) -> None:
    if abs(inp.p_s + inp.p_f - 1.0) > 1e-9:
        raise ValueError(
            f"success and failure probabilities must sum to 1, got {inp.p_s} + {inp.p_f}"
        )


def resulting_valence(inp: ValenceInput) -> float:
    """Probability-weighted sum of success and failure valences."""
    _check_probabilities(inp)
    return inp.v_s * inp.p_s + inp.v_f * inp.p_f


def resultant_tendency(inp: ValenceInput) -> float:
    """Motive x probability x incentive, summed over success and failure."""
    _check_probabilities(inp)
    return inp.m_s * inp.p_s * inp.i_s + inp.m_f * inp.p_f * inp.i_f


def clamp01(value: float) -> float:
    return min(1.0, max(0.0, value))


def action_probability(mood: float | Mood, p_exp: float, params: LearningParams,
                       kind: ActionKind = ActionKind.SEARCH_LIGHT) -> float:
    """Mood plus scaled experience, clamped to [0, 1].

    The same rule gives both the search-light and the respond-call probability.
    """
    return clamp01(float(mood) + p_exp * params.resolution(kind))


def update_experience(ledger: ExperienceLedger, kind: ActionKind, rewarded: bool) -> ExperienceLedger:
    delta = ledger.step if rewarded else -ledger.step
    if ActionKind(kind) is ActionKind.SEARCH_LIGHT:
        return replace(ledger, p_exp_light=ledger.p_exp_light + delta)
    return replace(ledger, p_exp_call=ledger.p_exp_call + delta)


def decide_respond(prob: float, params: LearningParams) -> bool:
    if not (0.0 <= prob <= 1.0):
        raise ValueError(f"probability out of range: {prob!r}")
    return prob > params.respond_threshold


def group_respond_probability(moods: Sequence[float | Mood], p_exps: Sequence[float],
                              params: LearningParams) -> float:
    """Collective respond probability of a three-robot group.

    Mean mood plus mean scaled experience, clamped to [0, 1].
    """
    if len(moods) != 3 or len(p_exps) != 3:
        raise ValueError("the group decision is defined for exactly three robots")
    dl = params.resolution(ActionKind.RESPOND_CALL)
    mean_mood = math.fsum(float(m) for m in moods) / 3
    mean_exp = math.fsum(p * dl for p in p_exps) / 3
    return clamp01(mean_mood + mean_exp)
