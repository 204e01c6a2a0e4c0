"""Three-robot group protocol: leader election, gain relay, collective calls."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .adaptation import group_gains
from .decision import LearningParams, group_respond_probability
from .dynamics import AttitudeState, ControllerGains

ROBOT_IDS = (1, 2, 3)


@dataclass(frozen=True)
class GainReport:
    sender: int
    # (robot id, k_p, k_d) for every robot whose gains this message carries
    gains: tuple[tuple[int, float, float], ...]


@dataclass(frozen=True)
class GroupGains:
    sender: int
    k_pg: float
    k_dg: float


@dataclass(frozen=True)
class MoodExpReport:
    sender: int
    mood: float
    p_exp: float


@dataclass(frozen=True)
class GroupDecision:
    sender: int
    respond: bool
    probability: float


@dataclass(frozen=True)
class LeaderAnnounce:
    sender: int
    leader: int


Payload = Union[GainReport, GroupGains, MoodExpReport, GroupDecision, LeaderAnnounce]


@dataclass(frozen=True)
class Message:
    tick: int
    sender: int
    receiver: int
    payload: Payload
    delivered: bool = True

    @property
    def kind(self) -> str:
        return type(self.payload).__name__


@dataclass(frozen=True)
class FormationSpec:
    side: float = 1.0
    tolerance: float = 0.25

    def __post_init__(self) -> None:
        if not self.side > 0:
            raise ValueError("formation side length must be positive")
        if self.tolerance < 0:
            raise ValueError("formation tolerance must be non-negative")


class MessageBus:
    """In-order delivery with optional independent per-message loss.

    Every send is appended to ``log`` whether or not it arrived, so the
    traffic can be inspected afterwards.
    """

    def __init__(self, loss: float = 0.0, rng: np.random.Generator | None = None,
                 pivot: int = 3) -> None:
        if not 0.0 <= loss < 1.0:
            raise ValueError("loss probability must lie in [0, 1)")
        if loss > 0 and rng is None:
            raise ValueError("a lossy channel needs a random generator")
        if pivot not in ROBOT_IDS:
            raise ValueError(f"pivot must be one of {ROBOT_IDS}")
        self.loss = loss
        self.rng = rng
        self.pivot = pivot
        self.log: list[Message] = []

    def send(self, tick: int, sender: int, receiver: int, payload: Payload) -> bool:
        if isinstance(payload, (GroupGains, GroupDecision)) and sender != self.pivot:
            raise ValueError(f"only the pivot robot {self.pivot} may send {type(payload).__name__}")
        delivered = True
        if self.loss > 0:
            delivered = float(self.rng.random()) >= self.loss
        self.log.append(Message(tick, sender, receiver, payload, delivered))
        return delivered


def relay_order(pivot: int = 3) -> tuple[int, int, int]:
    """Robots in relay order; the pivot is last."""
    others = [r for r in ROBOT_IDS if r != pivot]
    return others[0], others[1], pivot


def elect_leader(intensities: Sequence[float]) -> int:
    """Id of the robot sensing the most light; ties go to the lowest id."""
    if len(intensities) != 3:
        raise ValueError("leader election needs exactly three intensities")
    best = 0
    for i in (1, 2):
        if intensities[i] > intensities[best]:
            best = i
    return best + 1


def relay_round(bus: MessageBus, tick: int, gains: Mapping[int, ControllerGains],
                previous: Mapping[int, ControllerGains]) -> dict[int, ControllerGains]:
    """One gain relay: first -> second -> pivot, then pivot broadcast.

    Returns the group gains each robot holds after the round. If any message
    is lost the whole round is void and every robot keeps ``previous``.
    """
    first, second, pivot = relay_order(bus.pivot)
    g1, g2, g3 = gains[first], gains[second], gains[pivot]
    kept = dict(previous)

    if not bus.send(tick, first, second, GainReport(first, ((first, g1.k_p, g1.k_d),))):
        return kept
    carried = ((first, g1.k_p, g1.k_d), (second, g2.k_p, g2.k_d))
    if not bus.send(tick, second, pivot, GainReport(second, carried)):
        return kept

    reported = {rid: (kp, kd) for rid, kp, kd in carried}
    reported[pivot] = (g3.k_p, g3.k_d)
    ordered = [reported[r] for r in ROBOT_IDS]
    k_pg, k_dg = group_gains([kp for kp, _ in ordered], [kd for _, kd in ordered])

    msg = GroupGains(pivot, k_pg, k_dg)
    ok_first = bus.send(tick, pivot, first, msg)
    ok_second = bus.send(tick, pivot, second, msg)
    if not (ok_first and ok_second):
        return kept
    group = ControllerGains(k_pg, k_dg)
    return {r: group for r in ROBOT_IDS}


def collective_decide(bus: MessageBus, tick: int, moods: Mapping[int, float],
                      p_exps: Mapping[int, float], params: LearningParams) -> GroupDecision | None:
    """Collect mood/experience reports at the pivot and broadcast the group call.

    Returns None when a report or the broadcast is lost (no decision this round).
    """
    pivot = bus.pivot
    arrived = True
    for rid in ROBOT_IDS:
        if rid != pivot:
            arrived &= bus.send(tick, rid, pivot, MoodExpReport(rid, moods[rid], p_exps[rid]))
    if not arrived:
        return None
    prob = group_respond_probability([moods[r] for r in ROBOT_IDS], [p_exps[r] for r in ROBOT_IDS], params)
    decision = GroupDecision(pivot, prob > params.respond_threshold, prob)
    delivered = True
    for rid in ROBOT_IDS:
        if rid != pivot:
            delivered &= bus.send(tick, pivot, rid, decision)
    return decision if delivered else None


def follower_reference(leader: AttitudeState, leader_id: int) -> dict[int, float]:
    """Heading reference for each follower: the leader's current heading."""
    return {rid: leader.theta for rid in ROBOT_IDS if rid != leader_id}


def formation_offsets(side: float) -> tuple[tuple[float, float], ...]:
    """Vertices of an equilateral triangle with centroid at the origin."""
    r = side / math.sqrt(3.0)
    return tuple((r * math.cos(a), r * math.sin(a))
                 for a in (math.pi / 2, math.pi / 2 + 2 * math.pi / 3, math.pi / 2 + 4 * math.pi / 3))


def formation_error(poses: Sequence[Sequence[float]], spec: FormationSpec) -> float:
    """Largest deviation of a pairwise distance from the formation side length."""
    if len(poses) != 3:
        raise ValueError("formation error needs exactly three poses")
    pts = [(float(p[0]), float(p[1])) for p in poses]
    return max(abs(math.dist(a, b) - spec.side) for a, b in itertools.combinations(pts, 2))
