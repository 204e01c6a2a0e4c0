"""Deterministic simulation of learning robots with PD-steered headings and a three-robot group protocol."""

from .adaptation import GainSchedule, VisitMap, adapted_gains, group_gains
from .config import ConfigError, Event, EventKind, ScenarioConfig
from .decision import (
    ActionKind,
    ExperienceLedger,
    LearningParams,
    Mood,
    MoodSource,
    ValenceInput,
    action_probability,
    decide_respond,
    group_respond_probability,
    resultant_tendency,
    resulting_valence,
    update_experience,
)
from .dynamics import (
    AttitudeState,
    ControllerGains,
    NumericalBlowUp,
    PlantParams,
    derivatives,
    simulate_response,
    steady_state_theta,
    step,
)
from .harness import Simulation, TraceLog, run
from .scenario import load_scenario, parse_scenario, serialize_scenario

__version__ = "0.1.0"

__all__ = [
    "ActionKind", "AttitudeState", "ConfigError", "ControllerGains", "Event", "EventKind",
    "ExperienceLedger", "GainSchedule", "LearningParams", "Mood", "MoodSource", "NumericalBlowUp",
    "PlantParams", "ScenarioConfig", "Simulation", "TraceLog", "ValenceInput", "VisitMap",
    "action_probability", "adapted_gains", "decide_respond", "derivatives", "group_gains",
    "group_respond_probability", "load_scenario", "parse_scenario", "resultant_tendency",
    "resulting_valence", "run", "serialize_scenario", "simulate_response", "steady_state_theta",
    "step", "update_experience",
]
