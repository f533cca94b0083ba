"""Turn execution: plan, call the translation agent, concatenate, decode once.

Generate calls without placement form the main track; their token sequences are
concatenated and detokenized as ONE sequence (universal decoding), so the codec
smooths the junctions. A generate call carrying a placement tuple becomes its
own second-person track. Caption calls tokenize the referenced stored motion
and run the captioning adapters. Stored motions are never mutated; extensions
re-decode under a fresh id.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..codec.tokenizer import MotionCodec, MotionTokenSeq, concat_tokens
from ..errors import SessionError
from ..lm.decode import GenerationConfig, generate_caption, generate_motion_tokens
from ..lm.model import AdapterSet, MotionLM
from .plan import Plan
from .planner import PlannerPrompt
from .session import MotionRecord, Session, SessionStore, Turn


@dataclass(frozen=True)
class TurnResult:
    plan: Plan
    response_text: str | None
    motion_ids: tuple[str, ...]
    captions: tuple[str, ...]


@dataclass
class Orchestrator:
    codec: MotionCodec
    model: MotionLM
    generation_adapters: AdapterSet
    captioning_adapters: AdapterSet
    planner: object                      # PlannerBackend: make_plan(PlannerPrompt) -> Plan
    store: SessionStore
    generation_config: GenerationConfig = field(default_factory=lambda: GenerationConfig(temperature=0.0))

    def new_session(self) -> Session:
        return self.store.create_session()

    def run_turn(self, session_id: str, text: str) -> TurnResult:
        """One conversational turn: plan against full history, then execute."""
        session = self.store.get_session(session_id)
        prompt = PlannerPrompt(
            request=text,
            history=tuple(self._history(session)),
            known_motions=tuple(session.motion_ids),
        )
        plan = self.planner.make_plan(prompt)
        result = self.execute_plan(plan, session)
        turn = Turn(
            index=len(session.turns),
            user_text=text,
            plan=plan,
            response_text=result.response_text,
            motion_ids=result.motion_ids,
            captions=result.captions,
        )
        self.store.append_turn(session_id, turn)
        return result

    def _history(self, session: Session) -> list[dict]:
        msgs = []
        for turn in session.turns:
            msgs.append({"role": "user", "content": turn.user_text})
            msgs.append({"role": "assistant", "content": turn.plan.to_json()})
            for mid, caption in zip(
                [c.motion_ref for c in turn.plan.calls if c.task == "caption"], turn.captions
            ):
                msgs.append({"role": "user", "content": f"[caption of {mid}: {caption}]"})
        return msgs

    def execute_plan(self, plan: Plan, session: Session) -> TurnResult:
        """Execute calls in order; one decode per track."""
        turn_index = len(session.turns)
        captions: list[str] = []
        main_segments: list[MotionTokenSeq] = []
        main_sources: list[str] = []
        side_tracks: list[tuple[MotionTokenSeq, str, tuple[float, float, float]]] = []
        for call in plan.calls:
            if call.task == "caption":
                if not self.store.has_motion(call.motion_ref):
                    raise SessionError(f"caption call references unknown motion {call.motion_ref!r}")
                seq, _ = self.store.get_motion(call.motion_ref)
                tokens = self.codec.tokenize(seq)
                captions.append(
                    generate_caption(self.model, self.captioning_adapters, tokens, self.generation_config)
                )
                continue
            tokens = generate_motion_tokens(self.model, self.generation_adapters, call.argument, self.generation_config)
            if call.placement is not None:
                side_tracks.append((tokens, call.argument, tuple(call.placement.as_list())))
                continue
            if call.motion_ref is not None:
                if not self.store.has_motion(call.motion_ref):
                    raise SessionError(f"extend call references unknown motion {call.motion_ref!r}")
                _, base = self.store.get_motion(call.motion_ref)
                base_tokens = MotionTokenSeq(ids=base.tokens, truncated=base.truncated)
                main_segments.extend([base_tokens, tokens])
                main_sources.extend([f"extend:{call.motion_ref}", call.argument])
            else:
                main_segments.append(tokens)
                main_sources.append(call.argument)

        motion_ids: list[str] = []
        if main_segments:
            motion_ids.append(self._store_track(session, turn_index, main_segments, main_sources, None))
        for tokens, source, placement in side_tracks:
            motion_ids.append(self._store_track(session, turn_index, [tokens], [source], placement))
        return TurnResult(
            plan=plan,
            response_text=plan.response_text,
            motion_ids=tuple(motion_ids),
            captions=tuple(captions),
        )

    def _store_track(self, session, turn_index, segments, sources, placement) -> str:
        joined = concat_tokens(segments) if len(segments) > 1 else segments[0]
        seq = self.codec.detokenize(joined)
        record = MotionRecord(
            motion_id=self.store.new_motion_id(session.session_id),
            tokens=joined.ids,
            call_token_counts=tuple(len(s) for s in segments),
            sources=tuple(sources),
            placement=placement,
            truncated=any(s.truncated for s in segments),
            session_id=session.session_id,
            turn_index=turn_index,
        )
        self.store.add_motion(seq, record)
        return record.motion_id
