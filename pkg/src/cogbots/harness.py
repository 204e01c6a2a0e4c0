"""Fixed-step simulation loop and its trace log.

Each tick runs, for every robot in id order: perceive, pick a goal, integrate
the heading dynamics, move, count visits, then feed and learn. Group relay
rounds and leader election run after all robots have finished the tick.
"""

from __future__ import annotations

import csv
import io
import math
from operator import attrgetter
from collections import deque
from dataclasses import dataclass, field, fields, replace
from typing import Iterable

import numpy as np

from .adaptation import VisitMap, adapted_gains
from .cognition import (
    ConceptualMemory,
    Goal,
    GoalKind,
    consume_light,
    nearest_heading,
    perceive,
    reflex_escape,
    select_goal,
)
from .config import ConfigError, EventKind, ScenarioConfig
from .decision import ActionKind, ExperienceLedger, MoodSource
from .dynamics import AttitudeState, ControllerGains, check_turning_gains, max_stable_dt, step
from .environment import intensity_at, motion_step
from .swarm import (
    ROBOT_IDS,
    LeaderAnnounce,
    Message,
    MessageBus,
    collective_decide,
    elect_leader,
    follower_reference,
    formation_offsets,
    relay_round,
)

# re-exported for callers that think of these as harness operations
from .environment import Environment, intensity_gradient  # noqa: F401


@dataclass(slots=True)
class TraceRow:
    tick: int
    robot: int
    x: float
    y: float
    theta: float
    omega: float
    goal: str
    mood: float | None
    p_sl: float | None
    p_rsp: float | None
    p_exp_light: float
    p_exp_call: float
    k_p: float
    k_d: float
    k_pg: float
    k_dg: float
    leader: int
    satiation: float
    visits: int


@dataclass(slots=True)
class DecisionRow:
    tick: int
    robot: int
    kind: str
    mood: float
    p_exp: float
    probability: float
    chosen: bool


@dataclass(slots=True)
class EventRow:
    tick: int
    kind: str
    robot: int | None = None


TRACE_COLUMNS = tuple(f.name for f in fields(TraceRow))
DECISION_COLUMNS = tuple(f.name for f in fields(DecisionRow))
EVENT_COLUMNS = tuple(f.name for f in fields(EventRow))
MESSAGE_COLUMNS = ("tick", "sender", "receiver", "kind", "delivered", "payload")

_trace_fields = attrgetter(*TRACE_COLUMNS)
_decision_fields = attrgetter(*DECISION_COLUMNS)
_event_fields = attrgetter(*EVENT_COLUMNS)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(float(value))  # plain repr even for numpy scalars
    return str(value)


def csv_text(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _payload_text(msg: Message) -> str:
    p = msg.payload
    return ";".join(f"{f.name}={_fmt(getattr(p, f.name))}" for f in fields(p) if f.name != "sender")


@dataclass
class TraceLog:
    rows: list[TraceRow] = field(default_factory=list)
    messages: list[Message] = field(default_factory=list)
    events: list[EventRow] = field(default_factory=list)
    decisions: list[DecisionRow] = field(default_factory=list)

    def trace_csv(self) -> str:
        return csv_text(TRACE_COLUMNS, map(_trace_fields, self.rows))

    def messages_csv(self) -> str:
        return csv_text(MESSAGE_COLUMNS, ((m.tick, m.sender, m.receiver, m.kind, m.delivered, _payload_text(m))
                                           for m in self.messages))

    def events_csv(self) -> str:
        return csv_text(EVENT_COLUMNS, map(_event_fields, self.events))

    def decisions_csv(self) -> str:
        return csv_text(DECISION_COLUMNS, map(_decision_fields, self.decisions))

    def robot_rows(self, robot: int) -> list[TraceRow]:
        return [r for r in self.rows if r.robot == robot]


@dataclass
class _Call:
    start: int
    expires: int
    decided: bool = False
    responded: bool = False
    seen_by: set = field(default_factory=set)


@dataclass
class _Robot:
    rid: int
    x: float
    y: float
    attitude: AttitudeState
    gains: ControllerGains
    group: ControllerGains
    memory: ConceptualMemory
    visit_map: VisitMap
    cell: tuple[int, int]
    history: deque
    mood_source: MoodSource
    behave_rng: np.random.Generator
    gain_rng: np.random.Generator
    goal: Goal
    mood: float | None = None
    p_sl: float | None = None
    p_rsp: float | None = None
    visits: int = 0
    since_eval: int = 0
    force_eval: bool = True
    escape: list = field(default_factory=list)


def _validate(config: ScenarioConfig) -> None:
    v = config.validation
    if v.enabled:
        try:
            check_turning_gains(config.gains.initial, config.plant, v.eps_p, v.eps_d,
                                check_kd=not v.paper_compat)
        except ValueError as exc:
            raise ConfigError(f"gain validation: {exc}") from None
    worst = max_stable_dt(config.gains.saturation, config.plant)
    if config.dt >= worst:
        raise ConfigError(f"dt={config.dt} exceeds the integrator stability bound {worst:.4g}")


def _start_poses(config: ScenarioConfig) -> list[tuple[float, float, float]]:
    if config.starts:
        return [tuple(map(float, s)) for s in config.starts]
    hx, hy = config.environment.home
    if config.robots == 1:
        return [(hx, hy, 0.0)]
    return [(hx + ox, hy + oy, 0.0) for ox, oy in formation_offsets(config.formation.side)]


class Simulation:
    """Stateful runner for one scenario; ``run`` drives it to completion."""

    def __init__(self, config: ScenarioConfig) -> None:
        _validate(config)
        self.config = config
        self.env = config.environment
        self.log = TraceLog()
        self.reward_on = config.behaviour.reward_initially_on
        self.call: _Call | None = None
        root = np.random.SeedSequence(config.seed)
        robot_seqs = root.spawn(len(ROBOT_IDS) + 1)
        self.bus = MessageBus(config.swarm.loss, np.random.Generator(np.random.PCG64(robot_seqs[-1])),
                              pivot=config.swarm.pivot)
        self.robots: list[_Robot] = []
        initial = config.gains.initial
        for rid, (x, y, th) in zip(ROBOT_IDS, _start_poses(config)):
            if not self.env.free(x, y):
                raise ConfigError(f"robot {rid} starts at ({x}, {y}), outside the free arena")
            mood_seq, behave_seq, gain_seq = robot_seqs[rid - 1].spawn(3)
            vmap = VisitMap(config.cell_size)
            h = config.hunger
            memory = ConceptualMemory(ExperienceLedger(step=config.experience_step), h.initial_satiation,
                                      h.satiation_max, h.hunger_threshold, h.decay, h.feed_quantum)
            history = deque(maxlen=config.phyletic.stuck_window + 1)
            history.append((x, y))
            self.robots.append(_Robot(
                rid, x, y, AttitudeState(th, 0.0), initial, initial, memory, vmap, vmap.cell_of((x, y)),
                history, MoodSource(mood_seq), np.random.Generator(np.random.PCG64(behave_seq)),
                np.random.Generator(np.random.PCG64(gain_seq)), Goal(GoalKind.IDLE, th),
            ))
        self.leader = 1
        if config.robots == 3:
            self.leader = elect_leader([intensity_at(self.env, (r.x, r.y)) for r in self.robots])
        self._events = list(config.events)
        self._event_idx = 0

    @property
    def group_mode(self) -> bool:
        return self.config.robots == 3

    def by_id(self, rid: int) -> _Robot:
        return self.robots[rid - 1]

    def run(self) -> TraceLog:
        for tick in range(self.config.ticks):
            self.tick(tick)
        self.log.messages = list(self.bus.log)
        return self.log

    def tick(self, t: int) -> None:
        self._apply_events(t)
        if self.call is not None and t >= self.call.expires:
            self.log.events.append(EventRow(t, "CallExpired"))
            self._clear_call()
        for robot in self.robots:
            self._robot_stage(t, robot)
        if self.group_mode:
            self._group_stage(t)

    def _apply_events(self, t: int) -> None:
        while self._event_idx < len(self._events) and self._events[self._event_idx].tick == t:
            ev = self._events[self._event_idx]
            self._event_idx += 1
            self.log.events.append(EventRow(t, ev.kind.value))
            if ev.kind is EventKind.CALL_FROM_HOME:
                self._clear_call()
                self.call = _Call(t, t + self.config.behaviour.call_timeout)
            elif ev.kind is EventKind.REWARD_ON:
                self.reward_on = True
            else:
                self.reward_on = False

    def _clear_call(self) -> None:
        for r in self.robots:
            if r.goal.kind is GoalKind.RESPOND_CALL:
                r.force_eval = True
        self.call = None

    def _call_pending(self) -> bool:
        return self.call is not None and not self.call.decided

    def _robot_stage(self, t: int, r: _Robot) -> None:
        cfg = self.config
        phyletic = cfg.phyletic
        percept = perceive(self.env, (r.x, r.y), r.history, phyletic, call_active=self._call_pending())
        is_leader = r.rid == self.leader

        # goal
        escape_heading = None
        if r.escape:
            escape_heading = r.escape.pop(0)
            r.goal = Goal(GoalKind.ESCAPE, escape_heading)
        elif percept.stuck:
            r.escape = reflex_escape(r.behave_rng, phyletic.escape_duration)
            r.history.clear()
            r.history.append((r.x, r.y))
            r.force_eval = True
            if r.escape:
                escape_heading = r.escape.pop(0)
            r.goal = Goal(GoalKind.ESCAPE, r.attitude.theta if escape_heading is None else escape_heading)
        elif is_leader or not self.group_mode:
            self._deliberate(t, r, percept)
        else:
            lead = self.by_id(self.leader)
            ref = follower_reference(lead.attitude, lead.rid)[r.rid]
            kind = lead.goal.kind if lead.goal.kind is not GoalKind.ESCAPE else r.goal.kind
            if kind is GoalKind.ESCAPE:
                kind = GoalKind.IDLE
            r.goal = Goal(kind, ref)

        # control + integrate
        if r.goal.kind is GoalKind.ESCAPE:
            if escape_heading is not None:
                r.attitude = AttitudeState(escape_heading, 0.0)
        else:
            gains = r.gains
            if self.group_mode and (not is_leader or cfg.swarm.leader_uses_group_gains):
                gains = r.group
            r.attitude = step(r.attitude, gains, cfg.plant, r.goal.theta_ref, cfg.dt)

        # move
        (r.x, r.y), _ = motion_step((r.x, r.y), r.attitude.theta, cfg.speed, cfg.dt, self.env)
        r.history.append((r.x, r.y))

        # visits and gain growth
        cell = r.visit_map.cell_of((r.x, r.y))
        if cell != r.cell:
            r.cell = cell
            r.visit_map.record_visit((r.x, r.y))
            r.visits += 1
            r.gains = adapted_gains(cfg.gains, r.gains, r.gain_rng)

        # feed and learn
        r.memory = r.memory.decayed()
        if r.goal.kind is GoalKind.RESPOND_CALL:
            hx, hy = self.env.home
            if math.hypot(r.x - hx, r.y - hy) <= cfg.behaviour.home_radius:
                self._resolve_call(t, r)
        elif r.goal.kind is not GoalKind.ESCAPE and r.memory.hungry:
            intensity = intensity_at(self.env, (r.x, r.y))
            if intensity > phyletic.happiness_threshold:
                r.memory = consume_light(r.memory, intensity, phyletic, ActionKind.SEARCH_LIGHT)
                r.force_eval = True

        ledger = r.memory.ledger
        self.log.rows.append(TraceRow(
            t, r.rid, r.x, r.y, r.attitude.theta, r.attitude.omega, r.goal.kind.value, r.mood,
            r.p_sl, r.p_rsp, ledger.p_exp_light, ledger.p_exp_call, r.gains.k_p, r.gains.k_d,
            r.group.k_p, r.group.k_d, self.leader, r.memory.satiation, r.visits,
        ))

    def _deliberate(self, t: int, r: _Robot, percept) -> None:
        cfg = self.config
        r.since_eval += 1
        new_call = self._call_pending() and r.rid not in self.call.seen_by
        epoch = r.force_eval or r.since_eval >= cfg.behaviour.reevaluate_every or new_call
        heading = r.attitude.theta
        if self.call is not None and self.call.responded:
            # an accepted call holds until it is resolved at home or expires
            r.goal = Goal(GoalKind.RESPOND_CALL, nearest_heading(percept.home_heading, heading), p_rsp=r.p_rsp)
            return
        if not epoch:
            kind = r.goal.kind
            if kind is GoalKind.RESPOND_CALL:
                r.goal = Goal(kind, nearest_heading(percept.home_heading, heading))
            elif kind is GoalKind.SEARCH_LIGHT and percept.light_gradient_heading is not None:
                r.goal = Goal(kind, nearest_heading(percept.light_gradient_heading, heading))
            elif kind is GoalKind.ESCAPE:
                r.goal = Goal(GoalKind.IDLE, heading)
            return

        r.since_eval = 0
        r.force_eval = False
        if self._call_pending():
            self.call.seen_by.add(r.rid)
        if self.group_mode and self._call_pending() and r.memory.hungry:
            decision = self._group_call(t)
            if decision is not None:
                self.call.decided = True
                if decision.respond:
                    self.call.responded = True
                    r.goal = Goal(GoalKind.RESPOND_CALL, nearest_heading(percept.home_heading, heading),
                                  p_rsp=decision.probability)
                    r.p_rsp = decision.probability
                    return
            percept = replace(percept, call_active=False)

        r.mood = r.mood_source.draw()
        goal = select_goal(percept, cfg.phyletic, r.memory, r.mood, cfg.learning, r.behave_rng,
                           heading=heading, idle_turn=cfg.behaviour.idle_turn)
        ledger = r.memory.ledger
        if goal.p_rsp is not None:
            r.p_rsp = goal.p_rsp
            chosen = goal.kind is GoalKind.RESPOND_CALL
            self.log.decisions.append(DecisionRow(t, r.rid, ActionKind.RESPOND_CALL.value, r.mood,
                                                  ledger.p_exp_call, goal.p_rsp, chosen))
            self.call.decided = True
            self.call.responded = chosen
        if goal.p_sl is not None:
            r.p_sl = goal.p_sl
            self.log.decisions.append(DecisionRow(t, r.rid, ActionKind.SEARCH_LIGHT.value, r.mood,
                                                  ledger.p_exp_light, goal.p_sl,
                                                  goal.kind is GoalKind.SEARCH_LIGHT))
        r.goal = goal

    def _group_call(self, t: int):
        moods, p_exps = {}, {}
        for robot in self.robots:
            robot.mood = robot.mood_source.draw()
            moods[robot.rid] = robot.mood
            p_exps[robot.rid] = robot.memory.ledger.p_exp_call
        decision = collective_decide(self.bus, t, moods, p_exps, self.config.learning)
        if decision is not None:
            for robot in self.robots:
                robot.p_rsp = decision.probability
            self.log.decisions.append(DecisionRow(
                t, self.config.swarm.pivot, ActionKind.RESPOND_CALL.value,
                math.fsum(moods.values()) / 3, math.fsum(p_exps.values()) / 3,
                decision.probability, decision.respond,
            ))
        return decision

    def _resolve_call(self, t: int, r: _Robot) -> None:
        cfg = self.config
        intensity = intensity_at(self.env, self.env.home) + (cfg.behaviour.reward_power if self.reward_on else 0.0)
        rewarded = intensity > cfg.phyletic.happiness_threshold
        targets = [r] if not self.group_mode else [x for x in self.robots if x.goal.kind is not GoalKind.ESCAPE]
        for robot in targets:
            robot.memory = consume_light(robot.memory, intensity, cfg.phyletic, ActionKind.RESPOND_CALL)
        self.log.events.append(EventRow(t, "CallRewarded" if rewarded else "CallUnrewarded", r.rid))
        self.call = None
        for robot in self.robots:
            robot.force_eval = True

    def _group_stage(self, t: int) -> None:
        cfg = self.config
        if t % cfg.swarm.relay_every != 0:
            return
        holds = relay_round(self.bus, t, {r.rid: r.gains for r in self.robots},
                            {r.rid: r.group for r in self.robots})
        for r in self.robots:
            r.group = holds[r.rid]
        leader = elect_leader([intensity_at(self.env, (r.x, r.y)) for r in self.robots])
        if leader != self.leader:
            self.leader = leader
            self.by_id(leader).force_eval = True
            pivot = cfg.swarm.pivot
            for rid in ROBOT_IDS:
                if rid != pivot:
                    self.bus.send(t, pivot, rid, LeaderAnnounce(pivot, leader))


def run(config: ScenarioConfig) -> TraceLog:
    """Run a scenario to completion and return its trace."""
    return Simulation(config).run()
