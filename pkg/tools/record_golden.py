"""Record the golden two-turn transcript fixture from the deterministic pipeline.

Run from the repository root after any intentional change to training or
decoding behavior:  python3 tools/record_golden.py
"""

import hashlib
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from fastapi.testclient import TestClient

from _pipeline import build_test_pipeline
from motion_agent.agent import Orchestrator, RuleBasedPlanner, SessionStore
from motion_agent.lm import GenerationConfig
from motion_agent.service import build_app_from_orchestrator

TURNS = ("walk forward then wave", "describe that motion")


def main() -> None:
    import tempfile

    pipeline = build_test_pipeline()
    with tempfile.TemporaryDirectory() as tmp:
        orch = Orchestrator(
            codec=pipeline["codec"],
            model=pipeline["model"],
            generation_adapters=pipeline["generation_adapters"],
            captioning_adapters=pipeline["captioning_adapters"],
            planner=RuleBasedPlanner(),
            store=SessionStore(Path(tmp) / "store", skeleton=pipeline["codec"].skeleton),
            generation_config=GenerationConfig(temperature=0.0, max_new_tokens=40),
        )
        client = TestClient(build_app_from_orchestrator(orch))
        orch.store.create_session("golden")
        out = []
        for text in TURNS:
            body = client.post("/sessions/golden/turns", json={"text": text}).json()
            motions = []
            for mid in body["motion_ids"]:
                seq, record = orch.store.get_motion(mid)
                motions.append(
                    {
                        "id": mid,
                        "tokens": list(record.tokens),
                        "frames": seq.num_frames,
                        "frames_sha256": hashlib.sha256(seq.frames.tobytes()).hexdigest(),
                    }
                )
            out.append({"user": text, "plan": body["plan"], "captions": body["captions"], "motions": motions})
    target = Path(__file__).resolve().parent.parent / "tests" / "data" / "golden_transcript.json"
    target.write_text(json.dumps(out, indent=2, sort_keys=True))
    print(f"recorded -> {target}")


if __name__ == "__main__":
    main()
