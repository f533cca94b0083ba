"""Service configuration: artifact locations, planner backend, store path."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..artifacts import file_sha256
from ..errors import ConfigError


@dataclass(frozen=True)
class PlannerSettings:
    kind: str = "rule-based"              # rule-based | remote
    endpoint: str = ""
    model: str = "gpt-4"
    api_key_env: str = "PLANNER_API_KEY"
    timeout: float = 30.0

    def __post_init__(self):
        if self.kind not in ("rule-based", "remote"):
            raise ConfigError(f"unknown planner kind {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ConfigError("remote planner needs an endpoint")


@dataclass(frozen=True)
class ServiceConfig:
    codec_path: str
    model_path: str
    generation_adapters_path: str
    captioning_adapters_path: str
    store_path: str
    listen: str = "127.0.0.1:8080"
    planner: PlannerSettings = field(default_factory=PlannerSettings)
    artifact_hashes: dict = field(default_factory=dict)   # optional pinned sha256 per path key

    def artifact_paths(self) -> dict[str, str]:
        return {
            "codec": self.codec_path,
            "model": self.model_path,
            "generation_adapters": self.generation_adapters_path,
            "captioning_adapters": self.captioning_adapters_path,
        }

    def verify_artifacts(self) -> dict[str, str]:
        """Hash every artifact; missing files or pinned-hash mismatches refuse to serve."""
        hashes = {}
        for name, path in self.artifact_paths().items():
            if not Path(path).is_file():
                raise ConfigError(f"artifact {name} missing at {path}")
            digest = file_sha256(path)
            pinned = self.artifact_hashes.get(name)
            if pinned is not None and pinned != digest:
                raise ConfigError(f"artifact {name} hash mismatch: expected {pinned}, found {digest}")
            hashes[name] = digest
        return hashes

    @classmethod
    def from_json(cls, path: str | Path) -> "ServiceConfig":
        doc = json.loads(Path(path).read_text())
        planner = PlannerSettings(**doc.pop("planner", {}))
        try:
            return cls(planner=planner, **doc)
        except TypeError as exc:
            raise ConfigError(f"bad service config: {exc}") from exc
