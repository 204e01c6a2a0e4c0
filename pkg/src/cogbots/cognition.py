"""Two-layer perception-action loop.

The phyletic layer is fixed at construction and handles reflexes (stuck
detection and random escape). The conceptual layer holds what the robot has
learned, plus its hunger state, and picks goals.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .decision import (
    ActionKind,
    ExperienceLedger,
    LearningParams,
    Mood,
    action_probability,
    decide_respond,
    update_experience,
)
from .environment import Environment, intensity_at, intensity_gradient


class GoalKind(str, Enum):
    SEARCH_LIGHT = "SearchLight"
    RESPOND_CALL = "RespondCall"
    IDLE = "Idle"
    ESCAPE = "Escape"


@dataclass(frozen=True)
class Goal:
    kind: GoalKind
    theta_ref: float
    p_sl: float | None = None
    p_rsp: float | None = None


@dataclass(frozen=True)
class PhyleticMemory:
    happiness_threshold: float = 0.5
    stuck_window: int = 50
    stuck_epsilon: float = 0.01
    escape_duration: int = 30

    def __post_init__(self) -> None:
        if self.stuck_window < 1:
            raise ValueError("stuck_window must be at least one tick")
        if self.stuck_epsilon < 0 or self.escape_duration < 0:
            raise ValueError("stuck_epsilon and escape_duration must be non-negative")


@dataclass(frozen=True)
class ConceptualMemory:
    """Learned experience plus satiation.

    Starts void: a zero ledger and zero satiation unless told otherwise.
    """

    ledger: ExperienceLedger = ExperienceLedger()
    satiation: float = 0.0
    satiation_max: float = 1.0
    hunger_threshold: float = 0.5
    decay: float = 0.002
    feed_quantum: float = 0.6

    def __post_init__(self) -> None:
        if not self.satiation_max > 0:
            raise ValueError("satiation_max must be positive")
        if not (0.0 <= self.satiation <= self.satiation_max):
            raise ValueError("satiation must lie in [0, satiation_max]")
        if self.decay < 0 or self.feed_quantum < 0:
            raise ValueError("decay and feed_quantum must be non-negative")

    @property
    def hungry(self) -> bool:
        return self.satiation <= self.hunger_threshold

    def decayed(self) -> ConceptualMemory:
        return replace(self, satiation=max(0.0, self.satiation - self.decay))


@dataclass(frozen=True)
class Percept:
    light_intensity: float
    light_gradient_heading: float | None
    call_active: bool
    stuck: bool
    position: tuple[float, float]
    home_heading: float = 0.0


def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


def nearest_heading(target: float, current: float) -> float:
    """The representative of ``target`` (mod 2*pi) closest to ``current``."""
    return current + wrap_angle(target - current)


def is_stuck(history: Sequence[tuple[float, float]], phyletic: PhyleticMemory) -> bool:
    """True when the last ``stuck_window`` ticks moved less than ``stuck_epsilon``."""
    if len(history) < phyletic.stuck_window + 1:
        return False
    (x0, y0), (x1, y1) = history[-1 - phyletic.stuck_window], history[-1]
    return math.hypot(x1 - x0, y1 - y0) < phyletic.stuck_epsilon


def perceive(env: Environment, position: tuple[float, float], history: Sequence[tuple[float, float]],
             phyletic: PhyleticMemory, call_active: bool = False) -> Percept:
    gx, gy = intensity_gradient(env, position)
    gradient_heading = math.atan2(gy, gx) if (gx or gy) else None
    hx, hy = env.home
    return Percept(
        light_intensity=intensity_at(env, position),
        light_gradient_heading=gradient_heading,
        call_active=call_active,
        stuck=is_stuck(history, phyletic),
        position=(position[0], position[1]),
        home_heading=math.atan2(hy - position[1], hx - position[0]),
    )


def select_goal(percept: Percept, phyletic: PhyleticMemory, conceptual: ConceptualMemory,
                mood: float | Mood, params: LearningParams, rng: np.random.Generator,
                heading: float = 0.0, idle_turn: float = math.pi / 2) -> Goal:
    """Pick a goal by priority: escape, respond to a call, search light, idle.

    ``heading`` is the current body angle; target headings are returned as
    the representative closest to it so the controller never spins a full turn.
    """
    if percept.stuck:
        return Goal(GoalKind.ESCAPE, heading)
    if not conceptual.hungry:
        return _idle(heading, rng, idle_turn)

    p_rsp = None
    if percept.call_active:
        p_rsp = action_probability(mood, conceptual.ledger.p_exp_call, params, ActionKind.RESPOND_CALL)
        if decide_respond(p_rsp, params):
            return Goal(GoalKind.RESPOND_CALL, nearest_heading(percept.home_heading, heading), p_rsp=p_rsp)

    p_sl = action_probability(mood, conceptual.ledger.p_exp_light, params, ActionKind.SEARCH_LIGHT)
    if float(rng.random()) < p_sl:
        target = percept.light_gradient_heading
        theta_ref = heading if target is None else nearest_heading(target, heading)
        return Goal(GoalKind.SEARCH_LIGHT, theta_ref, p_sl=p_sl, p_rsp=p_rsp)
    idle = _idle(heading, rng, idle_turn)
    return replace(idle, p_sl=p_sl, p_rsp=p_rsp)


def _idle(heading: float, rng: np.random.Generator, idle_turn: float) -> Goal:
    return Goal(GoalKind.IDLE, heading + float(rng.uniform(-idle_turn, idle_turn)))


def reflex_escape(rng: np.random.Generator, escape_duration: int) -> list[float]:
    """Random headings in [-pi, pi) for each tick of an escape episode."""
    return [float(h) for h in rng.uniform(-math.pi, math.pi, size=escape_duration)]


def consume_light(conceptual: ConceptualMemory, intensity: float, phyletic: PhyleticMemory,
                  last_action: ActionKind) -> ConceptualMemory:
    """Feed on light above the happiness level and reinforce the last action.

    A trip home after a call that ends without food above the happiness level
    is punished. Otherwise nothing changes.
    """
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    if intensity > phyletic.happiness_threshold:
        satiation = min(conceptual.satiation_max, conceptual.satiation + conceptual.feed_quantum)
        ledger = update_experience(conceptual.ledger, last_action, rewarded=True)
        return replace(conceptual, satiation=satiation, ledger=ledger)
    if ActionKind(last_action) is ActionKind.RESPOND_CALL:
        return replace(conceptual, ledger=update_experience(conceptual.ledger, last_action, rewarded=False))
    return conceptual


def position_history(phyletic: PhyleticMemory) -> deque:
    return deque(maxlen=phyletic.stuck_window + 1)
