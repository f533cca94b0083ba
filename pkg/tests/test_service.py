"""HTTP surface: endpoints, error mapping, persistence, golden transcript."""

import json
import struct
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from motion_agent.agent import Orchestrator, RemotePlanner, RemotePlannerConfig, RuleBasedPlanner, SessionStore
from motion_agent.lm import GenerationConfig
from motion_agent.service import ServiceConfig, build_app, build_app_from_orchestrator
from motion_agent.service.config import PlannerSettings

GOLDEN_PATH = Path(__file__).parent / "data" / "golden_transcript.json"


def make_orchestrator(pipeline, root, planner=None):
    return Orchestrator(
        codec=pipeline["codec"],
        model=pipeline["model"],
        generation_adapters=pipeline["generation_adapters"],
        captioning_adapters=pipeline["captioning_adapters"],
        planner=planner or RuleBasedPlanner(),
        store=SessionStore(root, skeleton=pipeline["codec"].skeleton),
        generation_config=GenerationConfig(temperature=0.0, max_new_tokens=40),
    )


@pytest.fixture()
def client(pipeline, tmp_path):
    orch = make_orchestrator(pipeline, tmp_path / "store")
    app = build_app_from_orchestrator(orch, artifact_hashes={"codec": "abc", "model": "def"})
    return TestClient(app)


class TestEndpoints:
    def test_session_turn_flow(self, client):
        sid = client.post("/sessions").json()["session_id"]
        resp = client.post(f"/sessions/{sid}/turns", json={"text": "walk forward then wave"})
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["plan"]["calls"]) == 2
        assert len(body["motion_ids"]) == 1
        transcript = client.get(f"/sessions/{sid}").json()
        assert len(transcript["turns"]) == 1
        assert transcript["turns"][0]["plan"] == body["plan"]

    def test_joints_shape_and_boundaries(self, client):
        sid = client.post("/sessions").json()["session_id"]
        body = client.post(f"/sessions/{sid}/turns", json={"text": "walk forward then wave"}).json()
        mid = body["motion_ids"][0]
        joints = client.get(f"/motions/{mid}/joints").json()
        arr = np.asarray(joints["joints"])
        assert arr.ndim == 3 and arr.shape[2] == 3 and arr.shape[1] == 8
        assert len(joints["boundary_frames"]) == len(body["plan"]["calls"]) - 1
        for b in joints["boundary_frames"]:
            assert 0 < b < arr.shape[0]

    def test_tokens_endpoint_bracketed(self, client):
        sid = client.post("/sessions").json()["session_id"]
        body = client.post(f"/sessions/{sid}/turns", json={"text": "crouch down"}).json()
        text = client.get(f"/motions/{body['motion_ids'][0]}/tokens").text
        assert text.startswith("<Motion> <Motion_") and text.endswith("</Motion>")

    def test_motion_binary_and_json(self, client):
        sid = client.post("/sessions").json()["session_id"]
        body = client.post(f"/sessions/{sid}/turns", json={"text": "turn left"}).json()
        mid = body["motion_ids"][0]
        raw = client.get(f"/motions/{mid}")
        assert raw.status_code == 200
        assert raw.content[:4] == b"MOTA"
        (t,) = struct.unpack_from("<I", raw.content, 8)
        doc = client.get(f"/motions/{mid}", headers={"accept": "application/json"}).json()
        assert len(doc["frames"]) == t

    def test_unknown_ids_404(self, client):
        assert client.get("/sessions/nope").status_code == 404
        assert client.get("/motions/nope/joints").status_code == 404
        assert client.post("/sessions/nope/turns", json={"text": "hi"}).status_code == 404

    def test_healthz_reports_hashes(self, client):
        body = client.get("/healthz").json()
        assert body["status"] == "ok"
        assert body["artifacts"] == {"codec": "abc", "model": "def"}
        assert body["codebook_size"] >= 2

    def test_plan_format_error_maps_to_422(self, pipeline, tmp_path):
        bad_planner = RemotePlanner(RemotePlannerConfig(endpoint="http://mock"), transport=lambda p: "not json")
        orch = make_orchestrator(pipeline, tmp_path / "store", planner=bad_planner)
        client = TestClient(build_app_from_orchestrator(orch))
        sid = client.post("/sessions").json()["session_id"]
        resp = client.post(f"/sessions/{sid}/turns", json={"text": "walk"})
        assert resp.status_code == 422
        assert resp.json()["raw_reply"] == "not json"

    def test_transport_error_maps_to_502(self, pipeline, tmp_path):
        from motion_agent.errors import PlannerTransportError

        def down(_):
            raise PlannerTransportError("unreachable")

        orch = make_orchestrator(pipeline, tmp_path / "store", planner=RemotePlanner(RemotePlannerConfig(endpoint="x"), transport=down))
        client = TestClient(build_app_from_orchestrator(orch))
        sid = client.post("/sessions").json()["session_id"]
        assert client.post(f"/sessions/{sid}/turns", json={"text": "walk"}).status_code == 502

    def test_restart_reproduces_transcript_and_bytes(self, pipeline, tmp_path):
        root = tmp_path / "store"
        orch = make_orchestrator(pipeline, root)
        client = TestClient(build_app_from_orchestrator(orch))
        sid = client.post("/sessions").json()["session_id"]
        client.post(f"/sessions/{sid}/turns", json={"text": "walk forward then wave"})
        before_transcript = client.get(f"/sessions/{sid}").json()
        mid = before_transcript["turns"][0]["motion_ids"][0]
        before_bytes = client.get(f"/motions/{mid}").content

        orch2 = make_orchestrator(pipeline, root)
        client2 = TestClient(build_app_from_orchestrator(orch2))
        after_transcript = client2.get(f"/sessions/{sid}").json()
        del before_transcript["updated_at"], after_transcript["updated_at"]
        del before_transcript["created_at"], after_transcript["created_at"]
        assert after_transcript == before_transcript
        assert client2.get(f"/motions/{mid}").content == before_bytes


class TestGoldenTranscript:
    TURNS = ("walk forward then wave", "describe that motion")

    def run_scripted(self, pipeline, root):
        orch = make_orchestrator(pipeline, root)
        client = TestClient(build_app_from_orchestrator(orch))
        sid = "golden"
        orch.store.create_session(sid)
        out = []
        for text in self.TURNS:
            body = client.post(f"/sessions/{sid}/turns", json={"text": text}).json()
            motions = []
            for mid in body["motion_ids"]:
                seq, record = orch.store.get_motion(mid)
                motions.append(
                    {
                        "id": mid,
                        "tokens": list(record.tokens),
                        "frames": seq.num_frames,
                        "frames_sha256": __import__("hashlib").sha256(seq.frames.tobytes()).hexdigest(),
                    }
                )
            out.append({"user": text, "plan": body["plan"], "captions": body["captions"], "motions": motions})
        return out

    def test_matches_recorded_golden(self, pipeline, tmp_path):
        """Two-turn scripted session against the frozen transcript fixture."""
        got = self.run_scripted(pipeline, tmp_path / "store")
        golden = json.loads(GOLDEN_PATH.read_text())
        assert got == golden
