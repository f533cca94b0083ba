"""Deterministic pipeline builder shared by fixtures and fixture-recording tools."""

from __future__ import annotations

from motion_agent.codec import pipeline_profile, train_vq
from motion_agent.data import CorpusConfig, synth_corpus
from motion_agent.lm import (
    CAPTIONING_PROMPT,
    GENERATION_PROMPT,
    GENERIC_TEXT,
    FinetuneConfig,
    PretrainConfig,
    build_examples,
    extend_vocabulary,
    finetune_adapters,
    pretrain_base,
)

CORPUS_SEED = 42


def build_test_pipeline() -> dict:
    corpus = synth_corpus(CorpusConfig(), CORPUS_SEED)
    codec, codec_log = train_vq(corpus, pipeline_profile())
    texts = [a.text for it in corpus.subset("train") for a in it.annotations]
    texts += [GENERATION_PROMPT, CAPTIONING_PROMPT] + GENERIC_TEXT
    base, base_log = pretrain_base(texts, PretrainConfig(epochs=30))
    model = extend_vocabulary(base, codec.codebook_size, seed=7)
    gen_examples = build_examples(corpus, codec, model.vocab, "generation", "train")
    gen_adapters, gen_log = finetune_adapters(model, gen_examples, "generation", FinetuneConfig(epochs=60, seed=1))
    cap_examples = build_examples(corpus, codec, model.vocab, "captioning", "train", concat_pairs=150, seed=5)
    cap_adapters, cap_log = finetune_adapters(model, cap_examples, "captioning", FinetuneConfig(epochs=90, seed=2))
    return {
        "corpus": corpus,
        "codec": codec,
        "codec_log": codec_log,
        "base": base,
        "base_log": base_log,
        "base_texts": texts,
        "model": model,
        "generation_adapters": gen_adapters,
        "generation_log": gen_log,
        "captioning_adapters": cap_adapters,
        "captioning_log": cap_log,
    }
