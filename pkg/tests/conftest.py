"""Shared fixtures. Training fixtures are session-scoped so the expensive
artifacts (codec, base model, adapters) are built once per pytest run."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _pipeline import CORPUS_SEED, build_test_pipeline  # noqa: E402

from motion_agent.codec import CodecTrainConfig, train_vq  # noqa: E402
from motion_agent.data import CorpusConfig, synth_corpus  # noqa: E402


@pytest.fixture(scope="session")
def corpus200():
    return synth_corpus(CorpusConfig(), CORPUS_SEED)


@pytest.fixture(scope="session")
def tiny_corpus():
    return synth_corpus(CorpusConfig(samples_per_archetype=6, frame_range=(48, 64)), 7)


@pytest.fixture(scope="session")
def tiny_codec(tiny_corpus):
    codec, _ = train_vq(tiny_corpus, CodecTrainConfig(max_epochs=8, seed=3))
    return codec


@pytest.fixture(scope="session")
def pipeline():
    """Full desk pipeline: codec + frozen base + both adapter sets, trained once."""
    return build_test_pipeline()
