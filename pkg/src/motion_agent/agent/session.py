"""Multi-turn session state over an append-only record log.

Each session is a log of length-prefixed JSON records; motions are immutable
side files (MOTA bytes plus a provenance sidecar). Nothing is ever rewritten:
edits append new records and new motion ids.
"""

from __future__ import annotations

import json
import struct
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ..data.motafile import read_motion, write_motion
from ..data.motion import MotionSequence
from ..data.skeleton import SkeletonSpec
from ..errors import SessionError, ValidationError
from .plan import Plan, parse_plan

_LEN = struct.Struct("<I")


@dataclass(frozen=True)
class MotionRecord:
    motion_id: str
    tokens: tuple[int, ...]
    call_token_counts: tuple[int, ...]   # per-call provenance; sums to len(tokens)
    sources: tuple[str, ...]             # argument text (or extend:<id>) per call
    placement: tuple[float, float, float] | None
    truncated: bool
    session_id: str
    turn_index: int

    def __post_init__(self):
        if sum(self.call_token_counts) != len(self.tokens):
            raise ValidationError("provenance token counts must sum to the stored token length")
        if len(self.call_token_counts) != len(self.sources):
            raise ValidationError("one source per call required")

    def boundaries(self) -> tuple[int, ...]:
        """Token offsets where one call's tokens end and the next begin."""
        out, acc = [], 0
        for c in self.call_token_counts[:-1]:
            acc += c
            out.append(acc)
        return tuple(out)


@dataclass(frozen=True)
class Turn:
    index: int
    user_text: str
    plan: Plan
    response_text: str | None
    motion_ids: tuple[str, ...]
    captions: tuple[str, ...]


@dataclass
class Session:
    session_id: str
    created_at: float
    updated_at: float
    turns: list[Turn] = field(default_factory=list)
    motion_ids: list[str] = field(default_factory=list)   # oldest first


class SessionStore:
    """Append-only persistence; with root=None everything stays in memory."""

    def __init__(self, root: str | Path | None = None, skeleton: SkeletonSpec | None = None):
        self.root = Path(root) if root is not None else None
        self.skeleton = skeleton
        self._sessions: dict[str, Session] = {}
        self._motions: dict[str, tuple[MotionSequence, MotionRecord]] = {}
        if self.root is not None:
            (self.root / "sessions").mkdir(parents=True, exist_ok=True)
            (self.root / "motions").mkdir(parents=True, exist_ok=True)
            self._replay()

    # -- sessions ----------------------------------------------------------

    def create_session(self, session_id: str | None = None) -> Session:
        sid = session_id or uuid.uuid4().hex[:12]
        if sid in self._sessions:
            raise SessionError(f"session {sid} already exists")
        now = time.time()
        session = Session(session_id=sid, created_at=now, updated_at=now)
        self._sessions[sid] = session
        self._append(sid, {"type": "created", "session_id": sid, "at": now})
        return session

    def get_session(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise SessionError(f"unknown session {session_id!r}") from None

    def list_sessions(self) -> list[str]:
        return sorted(self._sessions)

    def append_turn(self, session_id: str, turn: Turn) -> None:
        session = self.get_session(session_id)
        if turn.index != len(session.turns):
            raise SessionError(f"turn index {turn.index} out of order")
        session.turns.append(turn)
        session.updated_at = time.time()
        self._append(
            session_id,
            {
                "type": "turn",
                "index": turn.index,
                "user_text": turn.user_text,
                "plan": turn.plan.to_dict(),
                "response": turn.response_text,
                "motion_ids": list(turn.motion_ids),
                "captions": list(turn.captions),
                "at": session.updated_at,
            },
        )

    # -- motions -----------------------------------------------------------

    def new_motion_id(self, session_id: str) -> str:
        return f"{session_id}-m{len(self.get_session(session_id).motion_ids):04d}"

    def add_motion(self, seq: MotionSequence, record: MotionRecord) -> None:
        if record.motion_id in self._motions:
            raise SessionError(f"motion {record.motion_id} already stored (store is append-only)")
        session = self.get_session(record.session_id)
        self._motions[record.motion_id] = (seq, record)
        session.motion_ids.append(record.motion_id)
        if self.root is not None:
            write_motion(seq, self.root / "motions" / f"{record.motion_id}.mota")
            meta = {
                "motion_id": record.motion_id,
                "tokens": list(record.tokens),
                "call_token_counts": list(record.call_token_counts),
                "sources": list(record.sources),
                "placement": list(record.placement) if record.placement else None,
                "truncated": record.truncated,
                "session_id": record.session_id,
                "turn_index": record.turn_index,
            }
            (self.root / "motions" / f"{record.motion_id}.meta.json").write_text(json.dumps(meta, sort_keys=True))

    def has_motion(self, motion_id: str) -> bool:
        return motion_id in self._motions

    def get_motion(self, motion_id: str) -> tuple[MotionSequence, MotionRecord]:
        try:
            return self._motions[motion_id]
        except KeyError:
            raise SessionError(f"unknown motion {motion_id!r}") from None

    # -- persistence -------------------------------------------------------

    def _append(self, session_id: str, record: dict) -> None:
        if self.root is None:
            return
        blob = json.dumps(record, sort_keys=True).encode("utf-8")
        with open(self.root / "sessions" / f"{session_id}.log", "ab") as f:
            f.write(_LEN.pack(len(blob)))
            f.write(blob)

    def _replay(self) -> None:
        for meta_path in sorted((self.root / "motions").glob("*.meta.json")):
            meta = json.loads(meta_path.read_text())
            seq = read_motion(meta_path.with_name(f"{meta['motion_id']}.mota"), skeleton=self.skeleton)
            record = MotionRecord(
                motion_id=meta["motion_id"],
                tokens=tuple(meta["tokens"]),
                call_token_counts=tuple(meta["call_token_counts"]),
                sources=tuple(meta["sources"]),
                placement=tuple(meta["placement"]) if meta["placement"] else None,
                truncated=meta["truncated"],
                session_id=meta["session_id"],
                turn_index=meta["turn_index"],
            )
            self._motions[record.motion_id] = (seq, record)
        for log_path in sorted((self.root / "sessions").glob("*.log")):
            for record in _read_records(log_path):
                if record["type"] == "created":
                    sid = record["session_id"]
                    self._sessions[sid] = Session(session_id=sid, created_at=record["at"], updated_at=record["at"])
                elif record["type"] == "turn":
                    sid = log_path.stem
                    session = self._sessions[sid]
                    turn = Turn(
                        index=record["index"],
                        user_text=record["user_text"],
                        plan=parse_plan(record["plan"]),
                        response_text=record["response"],
                        motion_ids=tuple(record["motion_ids"]),
                        captions=tuple(record["captions"]),
                    )
                    session.turns.append(turn)
                    session.updated_at = record["at"]
                    for mid in record["motion_ids"]:
                        if mid not in session.motion_ids:
                            session.motion_ids.append(mid)


def _read_records(path: Path):
    raw = path.read_bytes()
    off = 0
    while off < len(raw):
        (n,) = _LEN.unpack_from(raw, off)
        off += _LEN.size
        yield json.loads(raw[off : off + n].decode("utf-8"))
        off += n
