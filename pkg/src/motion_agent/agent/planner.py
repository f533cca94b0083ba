"""Planner backends: a deterministic rule-based decomposer and a remote chat client.

Both produce a schema-valid Plan or raise a typed failure. The remote client
retries exactly once with a repair message when the reply fails to parse, then
surfaces PlanFormatError carrying the raw reply.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field

import httpx

from ..errors import PlanFormatError, PlannerTransportError
from .plan import AgentCall, PlacementTuple, Plan, parse_plan

INSTRUCTION_VERSION = 1

PLANNER_INSTRUCTION = """\
You coordinate a motion agent that can GENERATE short human motions from text \
and CAPTION stored motions. Decompose the user's request into an ordered list \
of agent calls. Reply with ONE JSON object and nothing else, in this schema:
{"response": string|null, "calls": [{"task": "generate"|"caption", \
"argument": string, "motion_ref": string|null, "placement": [theta, x, z]|null}]}
Rules: split multi-step requests into one generate call per short action, in \
order. Use motion_ref to caption or to extend a stored motion (ids are given \
in the conversation). Use placement (rotation radians, x meters, z meters) \
only when a second person must be positioned relative to the first. If no \
agent call is needed, put your answer in "response" and use an empty calls list.\
"""


@dataclass(frozen=True)
class PlannerPrompt:
    request: str
    history: tuple[dict, ...] = ()          # prior chat messages, {"role","content"}
    known_motions: tuple[str, ...] = ()     # stored motion ids, oldest first
    instruction: str = PLANNER_INSTRUCTION


class RuleBasedPlanner:
    """Offline deterministic decomposition by sequential connectives and intent words."""

    kind = "rule-based"

    _SPLIT = re.compile(r"\s*(?:,?\s+and\s+then\s+|,?\s+then\s+|,?\s+after\s+that,?\s+|,?\s+afterwards\s+|;\s*|,?\s+next\s+)\s*", re.I)
    _CAPTION_CUES = ("describe", "caption", "what is", "what was", "explain")
    _CONTINUE_CUES = ("continue", "keep ", "extend")
    _SECOND_PERSON_CUES = ("another person", "second person", "someone else")
    _VERB_3RD = {
        "walk": "walks",
        "turn": "turns",
        "wave": "waves",
        "crouch": "crouches",
        "squat": "squats",
        "stand": "stands",
        "jump": "jumps",
        "run": "runs",
        "sit": "sits",
        "stretch": "stretches",
    }

    def make_plan(self, prompt: PlannerPrompt) -> Plan:
        text = prompt.request.strip()
        lowered = text.lower()
        if any(cue in lowered for cue in self._CAPTION_CUES) and prompt.known_motions:
            return Plan(calls=(AgentCall(task="caption", argument="", motion_ref=prompt.known_motions[-1]),))
        if any(cue in lowered for cue in self._CONTINUE_CUES) and prompt.known_motions:
            argument = self._as_caption(self._strip_continuation(lowered))
            call = AgentCall(task="generate", argument=argument, motion_ref=prompt.known_motions[-1])
            return Plan(calls=(call,))
        clauses = [c for c in self._SPLIT.split(text) if c.strip()]
        if not clauses:
            return Plan(calls=(), response_text="Tell me what motion to generate or which motion to describe.")
        calls = []
        for clause in clauses:
            placement = None
            lc = clause.lower()
            if any(cue in lc for cue in self._SECOND_PERSON_CUES):
                placement = PlacementTuple(3.141592653589793, 0.0, 1.0)
                for cue in self._SECOND_PERSON_CUES:
                    lc = lc.replace(cue, "a person")
            calls.append(AgentCall(task="generate", argument=self._as_caption(lc), placement=placement))
        return Plan(calls=tuple(calls))

    def _strip_continuation(self, text: str) -> str:
        out = text
        for cue in ("make him ", "make her ", "make them ", "have him ", "have her ", "have them "):
            out = out.replace(cue, "")
        out = out.replace("continue ", "").replace("continues ", "")
        out = re.sub(r"\s*after that\.?$", "", out)
        return out

    def _as_caption(self, clause: str) -> str:
        words = clause.strip().strip(".!?").split()
        if not words:
            return "a person stands"
        if words[0] in ("a", "the", "someone", "somebody", "person"):
            return " ".join(words)
        head = words[0]
        if head.endswith("ing") and head[:-3] in self._VERB_3RD:
            words[0] = self._VERB_3RD[head[:-3]]
        elif head in self._VERB_3RD:
            words[0] = self._VERB_3RD[head]
        return "a person " + " ".join(words)


@dataclass
class RemotePlannerConfig:
    endpoint: str
    model: str = "gpt-4"
    api_key_env: str = "PLANNER_API_KEY"
    timeout: float = 30.0


class RemotePlanner:
    """Chat-completion planner speaking the OpenAI-style wire protocol.

    ``transport`` is injectable for tests: a callable (payload dict) -> reply text.
    """

    kind = "remote-chat-endpoint"

    def __init__(self, config: RemotePlannerConfig, transport=None):
        self.config = config
        self._transport = transport or self._http_transport

    def _http_transport(self, payload: dict) -> str:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = httpx.post(self.config.endpoint, json=payload, headers=headers, timeout=self.config.timeout)
        except httpx.HTTPError as exc:
            raise PlannerTransportError(f"planner endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise PlannerTransportError(f"planner endpoint returned HTTP {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise PlannerTransportError(f"malformed chat-completion envelope: {exc}") from exc

    def _messages(self, prompt: PlannerPrompt) -> list[dict]:
        msgs = [{"role": "system", "content": prompt.instruction}]
        msgs.extend(prompt.history)
        content = prompt.request
        if prompt.known_motions:
            content += "\n[stored motion ids: " + ", ".join(prompt.known_motions) + "]"
        msgs.append({"role": "user", "content": content})
        return msgs

    def make_plan(self, prompt: PlannerPrompt) -> Plan:
        messages = self._messages(prompt)
        payload = {"model": self.config.model, "messages": messages, "temperature": 0}
        reply = self._transport(payload)
        try:
            return parse_plan(reply)
        except PlanFormatError as first_error:
            repair = (
                f"Your reply could not be parsed: {first_error}. "
                "Reply again with ONLY the JSON object, no prose."
            )
            payload = {
                "model": self.config.model,
                "messages": messages + [{"role": "assistant", "content": reply}, {"role": "user", "content": repair}],
                "temperature": 0,
            }
            second = self._transport(payload)
            try:
                return parse_plan(second)
            except PlanFormatError as exc:
                raise PlanFormatError(f"planner reply invalid after one repair retry: {exc}", raw_reply=second) from exc
