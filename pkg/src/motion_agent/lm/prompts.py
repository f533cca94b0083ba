"""Instruction prompts for the two translation tasks."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError

GENERATION_PROMPT = "Generate a motion matching the following input human motion description."
CAPTIONING_PROMPT = "Generate a caption matching the following input human motion token sequence."

TASKS = ("generation", "captioning")


@dataclass(frozen=True)
class PromptTemplate:
    task: str

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}, expected one of {TASKS}")

    @property
    def text(self) -> str:
        return GENERATION_PROMPT if self.task == "generation" else CAPTIONING_PROMPT
