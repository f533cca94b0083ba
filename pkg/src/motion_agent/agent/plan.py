"""Validated plan objects and their JSON wire schema.

Schema (version 1):

    {
      "response": string | null,
      "calls": [
        {
          "task": "generate" | "caption",
          "argument": string,
          "motion_ref": string | null,
          "placement": [theta, x, z] | null
        }, ...
      ]
    }

``motion_ref`` on a caption call names the motion to describe; on a generate
call it names a stored motion whose tokens the new tokens extend. ``placement``
marks a call as a second person positioned relative to the first track.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from ..errors import PlanFormatError, ValidationError

PLAN_SCHEMA_VERSION = 1

TASKS = ("generate", "caption")


@dataclass(frozen=True)
class PlacementTuple:
    theta: float   # rotation about the vertical axis, radians, normalized to [-pi, pi]
    x: float
    z: float

    def __post_init__(self):
        for v in (self.theta, self.x, self.z):
            if not math.isfinite(v):
                raise ValidationError("placement values must be finite")
        wrapped = math.remainder(self.theta, 2 * math.pi)
        object.__setattr__(self, "theta", wrapped)

    def as_list(self) -> list[float]:
        return [self.theta, self.x, self.z]


@dataclass(frozen=True)
class AgentCall:
    task: str
    argument: str
    motion_ref: str | None = None
    placement: PlacementTuple | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValidationError(f"unknown task {self.task!r}")
        if self.task == "generate" and not self.argument.strip():
            raise ValidationError("generate calls need a non-empty argument")
        if self.task == "caption" and not self.motion_ref:
            raise ValidationError("caption calls need a motion_ref")


@dataclass(frozen=True)
class Plan:
    calls: tuple[AgentCall, ...]
    response_text: str | None = None

    def __post_init__(self):
        if not self.calls and not self.response_text:
            raise ValidationError("a plan needs calls or a direct response")

    def to_dict(self) -> dict:
        return {
            "response": self.response_text,
            "calls": [
                {
                    "task": c.task,
                    "argument": c.argument,
                    "motion_ref": c.motion_ref,
                    "placement": c.placement.as_list() if c.placement else None,
                }
                for c in self.calls
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def parse_plan(raw: str | dict) -> Plan:
    """Parse and schema-validate a planner reply; raises PlanFormatError with the raw text."""
    if isinstance(raw, str):
        text = raw
        try:
            doc = json.loads(raw)
        except ValueError as exc:
            raise PlanFormatError(f"reply is not valid JSON: {exc}", raw_reply=text) from exc
    else:
        doc = raw
        text = json.dumps(raw)
    if not isinstance(doc, dict):
        raise PlanFormatError("plan must be a JSON object", raw_reply=text)
    response = doc.get("response")
    if response is not None and not isinstance(response, str):
        raise PlanFormatError("'response' must be a string or null", raw_reply=text)
    calls_doc = doc.get("calls", [])
    if not isinstance(calls_doc, list):
        raise PlanFormatError("'calls' must be a list", raw_reply=text)
    calls = []
    for i, c in enumerate(calls_doc):
        if not isinstance(c, dict):
            raise PlanFormatError(f"call {i} must be an object", raw_reply=text)
        task = c.get("task")
        if task not in TASKS:
            raise PlanFormatError(f"call {i}: task must be one of {TASKS}", raw_reply=text)
        argument = c.get("argument", "")
        if not isinstance(argument, str):
            raise PlanFormatError(f"call {i}: argument must be a string", raw_reply=text)
        ref = c.get("motion_ref")
        if ref is not None and not isinstance(ref, str):
            raise PlanFormatError(f"call {i}: motion_ref must be a string or null", raw_reply=text)
        placement_doc = c.get("placement")
        placement = None
        if placement_doc is not None:
            if (
                not isinstance(placement_doc, (list, tuple))
                or len(placement_doc) != 3
                or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in placement_doc)
            ):
                raise PlanFormatError(f"call {i}: placement must be [theta, x, z]", raw_reply=text)
            placement = PlacementTuple(*[float(v) for v in placement_doc])
        try:
            calls.append(AgentCall(task=task, argument=argument, motion_ref=ref, placement=placement))
        except ValidationError as exc:
            raise PlanFormatError(f"call {i}: {exc}", raw_reply=text) from exc
    try:
        return Plan(calls=tuple(calls), response_text=response)
    except ValidationError as exc:
        raise PlanFormatError(str(exc), raw_reply=text) from exc
