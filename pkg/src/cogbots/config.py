"""Scenario configuration: every tunable of a run, with defaults."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .adaptation import GainSchedule
from .cognition import PhyleticMemory
from .decision import LearningParams
from .dynamics import PlantParams
from .environment import Environment
from .swarm import ROBOT_IDS, FormationSpec


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


class EventKind(str, Enum):
    CALL_FROM_HOME = "CallFromHome"
    REWARD_ON = "RewardOn"
    REWARD_OFF = "RewardOff"


@dataclass(frozen=True)
class Event:
    tick: int
    kind: EventKind


@dataclass(frozen=True)
class HungerParams:
    satiation_max: float = 1.0
    initial_satiation: float = 0.0
    hunger_threshold: float = 0.5
    decay: float = 0.002
    feed_quantum: float = 0.6


@dataclass(frozen=True)
class BehaviourParams:
    """Timing and geometry of goal-directed behaviour."""

    reevaluate_every: int = 10
    call_timeout: int = 200
    home_radius: float = 0.3
    reward_power: float = 1.0
    reward_initially_on: bool = True
    idle_turn: float = math.pi / 2

    def __post_init__(self) -> None:
        if self.reevaluate_every < 1 or self.call_timeout < 1:
            raise ValueError("reevaluate_every and call_timeout must be >= 1")
        if not self.home_radius > 0 or self.reward_power < 0 or self.idle_turn < 0:
            raise ValueError("home_radius must be positive; reward_power and idle_turn non-negative")


@dataclass(frozen=True)
class GainValidation:
    """Turning-margin checks applied to gains before they reach the plant.

    ``paper_compat`` skips the derivative-gain margin, which the published
    initial k_d = 0.5 cannot satisfy.
    """

    enabled: bool = True
    eps_p: float = 1.05
    eps_d: float = 1.05
    paper_compat: bool = True


@dataclass(frozen=True)
class SwarmParams:
    pivot: int = 3
    relay_every: int = 10
    loss: float = 0.0
    leader_uses_group_gains: bool = True

    def __post_init__(self) -> None:
        if self.pivot not in ROBOT_IDS:
            raise ValueError(f"pivot must be one of {ROBOT_IDS}")
        if self.relay_every < 1:
            raise ValueError("relay_every must be >= 1")
        if not 0.0 <= self.loss < 1.0:
            raise ValueError("loss must lie in [0, 1)")


@dataclass(frozen=True)
class ResponseParams:
    """Step-response experiment used for the heading-response series."""

    theta0: float = 0.04
    theta_ref: float = 0.9
    horizon: float = 40.0
    visits: tuple[int, ...] = (1, 10, 20, 30)


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    dt: float = 0.01
    ticks: int = 2000
    robots: int = 1
    speed: float = 0.5
    experience_step: float = 1.0
    cell_size: float = 0.5
    learning: LearningParams = field(default_factory=LearningParams)
    plant: PlantParams = field(default_factory=PlantParams)
    gains: GainSchedule = field(default_factory=GainSchedule)
    validation: GainValidation = field(default_factory=GainValidation)
    phyletic: PhyleticMemory = field(default_factory=PhyleticMemory)
    hunger: HungerParams = field(default_factory=HungerParams)
    behaviour: BehaviourParams = field(default_factory=BehaviourParams)
    formation: FormationSpec = field(default_factory=FormationSpec)
    swarm: SwarmParams = field(default_factory=SwarmParams)
    environment: Environment = field(default_factory=Environment)
    starts: tuple[tuple[float, float, float], ...] = ()
    response: ResponseParams = field(default_factory=ResponseParams)
    events: tuple[Event, ...] = ()

    def __post_init__(self) -> None:
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a non-negative 64-bit integer")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.ticks < 1:
            raise ValueError("ticks must be positive")
        if self.robots not in (1, 3):
            raise ValueError("robots must be 1 or 3")
        if self.speed < 0:
            raise ValueError("speed must be non-negative")
        if not self.experience_step > 0:
            raise ValueError("experience_step must be positive")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")
        if self.starts and len(self.starts) != self.robots:
            raise ValueError(f"starts lists {len(self.starts)} poses for {self.robots} robot(s)")
        ticks = [e.tick for e in self.events]
        if ticks != sorted(ticks):
            raise ValueError("events must be sorted by tick")
        if any(t < 0 or t >= self.ticks for t in ticks):
            raise ValueError("events must fall inside [0, ticks)")
        h = self.hunger
        if not (0 <= h.initial_satiation <= h.satiation_max):
            raise ValueError("hunger.initial_satiation must lie in [0, satiation_max]")
