"""HTTP surface over the orchestrator: sessions, turns, motion retrieval."""

from __future__ import annotations

import io
import threading
from collections import defaultdict

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .. import __version__
from ..agent.orchestrator import Orchestrator
from ..agent.placement import apply_placement
from ..agent.planner import RemotePlanner, RemotePlannerConfig, RuleBasedPlanner
from ..agent.session import SessionStore
from ..codec.tokenizer import MotionCodec, MotionTokenSeq
from ..data.motafile import write_motion
from ..data.motion import forward_kinematics
from ..errors import PlanFormatError, PlannerTransportError, SessionError
from ..lm.model import AdapterSet, MotionLM
from .config import ServiceConfig


class TurnBody(BaseModel):
    text: str


def build_app(config: ServiceConfig) -> FastAPI:
    hashes = config.verify_artifacts()
    codec = MotionCodec.load(config.codec_path)
    model = MotionLM.load(config.model_path)
    gen_adapters = AdapterSet.load(config.generation_adapters_path, expect_base_hash=model.base_hash())
    cap_adapters = AdapterSet.load(config.captioning_adapters_path, expect_base_hash=model.base_hash())
    if config.planner.kind == "remote":
        planner = RemotePlanner(
            RemotePlannerConfig(
                endpoint=config.planner.endpoint,
                model=config.planner.model,
                api_key_env=config.planner.api_key_env,
                timeout=config.planner.timeout,
            )
        )
    else:
        planner = RuleBasedPlanner()
    store = SessionStore(config.store_path, skeleton=codec.skeleton)
    orchestrator = Orchestrator(
        codec=codec,
        model=model,
        generation_adapters=gen_adapters,
        captioning_adapters=cap_adapters,
        planner=planner,
        store=store,
    )
    return build_app_from_orchestrator(orchestrator, artifact_hashes=hashes)


def build_app_from_orchestrator(orchestrator: Orchestrator, artifact_hashes: dict | None = None) -> FastAPI:
    app = FastAPI(title="motion-agent", version=__version__)
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])
    store = orchestrator.store
    codec = orchestrator.codec
    turn_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)

    @app.exception_handler(SessionError)
    async def _session_error(_: Request, exc: SessionError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(PlanFormatError)
    async def _plan_error(_: Request, exc: PlanFormatError):
        return JSONResponse(status_code=422, content={"detail": str(exc), "raw_reply": exc.raw_reply})

    @app.exception_handler(PlannerTransportError)
    async def _transport_error(_: Request, exc: PlannerTransportError):
        return JSONResponse(status_code=502, content={"detail": str(exc)})

    @app.post("/sessions")
    def create_session():
        session = store.create_session()
        return {"session_id": session.session_id}

    @app.post("/sessions/{sid}/turns")
    def run_turn(sid: str, body: TurnBody):
        store.get_session(sid)           # 404 before acquiring a lock for unknown ids
        with turn_locks[sid]:            # per-session turns run FIFO
            result = orchestrator.run_turn(sid, body.text)
        return {
            "plan": result.plan.to_dict(),
            "response_text": result.response_text,
            "motion_ids": list(result.motion_ids),
            "captions": list(result.captions),
        }

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        session = store.get_session(sid)
        return {
            "session_id": session.session_id,
            "created_at": session.created_at,
            "updated_at": session.updated_at,
            "motion_ids": list(session.motion_ids),
            "turns": [
                {
                    "index": t.index,
                    "user_text": t.user_text,
                    "plan": t.plan.to_dict(),
                    "response_text": t.response_text,
                    "motion_ids": list(t.motion_ids),
                    "captions": list(t.captions),
                }
                for t in session.turns
            ],
        }

    @app.get("/motions/{mid}")
    def get_motion(mid: str, request: Request):
        seq, record = store.get_motion(mid)
        if "application/json" in request.headers.get("accept", ""):
            return {
                "motion_id": mid,
                "fps": seq.fps,
                "frames": seq.frames.tolist(),
                "tokens": list(record.tokens),
                "sources": list(record.sources),
            }
        buf = io.BytesIO()
        _write_mota(seq, buf)
        return Response(content=buf.getvalue(), media_type="application/octet-stream")

    @app.get("/motions/{mid}/joints")
    def get_joints(mid: str):
        seq, record = store.get_motion(mid)
        joints = forward_kinematics(seq)
        placed = record.placement is not None
        if placed:
            joints = apply_placement(joints, record.placement)
        downsample = codec.downsample
        return {
            "motion_id": mid,
            "fps": seq.fps,
            "joints": joints.positions.tolist(),
            "parent": seq.skeleton.parent.tolist(),
            "joint_names": list(seq.skeleton.joint_names),
            "placement_applied": placed,
            "boundary_frames": [b * downsample for b in record.boundaries()],
            "sources": list(record.sources),
            "truncated": record.truncated,
        }

    @app.get("/motions/{mid}/tokens")
    def get_tokens(mid: str):
        _, record = store.get_motion(mid)
        return PlainTextResponse(MotionTokenSeq(ids=record.tokens).to_text())

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "version": __version__,
            "artifacts": artifact_hashes or {},
            "codebook_size": codec.codebook_size,
            "downsample": codec.downsample,
        }

    return app


def _write_mota(seq, buf) -> None:
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "m.mota"
        write_motion(seq, path)
        buf.write(path.read_bytes())
