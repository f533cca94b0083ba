from .orchestrator import Orchestrator, TurnResult
from .placement import ScenePair, apply_placement, place_second_person, rotation_y
from .plan import AgentCall, PlacementTuple, Plan, parse_plan
from .planner import (
    PLANNER_INSTRUCTION,
    PlannerPrompt,
    RemotePlanner,
    RemotePlannerConfig,
    RuleBasedPlanner,
)
from .session import MotionRecord, Session, SessionStore, Turn

__all__ = [
    "AgentCall",
    "MotionRecord",
    "Orchestrator",
    "PLANNER_INSTRUCTION",
    "PlacementTuple",
    "Plan",
    "PlannerPrompt",
    "RemotePlanner",
    "RemotePlannerConfig",
    "RuleBasedPlanner",
    "ScenePair",
    "Session",
    "SessionStore",
    "Turn",
    "TurnResult",
    "apply_placement",
    "parse_plan",
    "place_second_person",
    "rotation_y",
]
