"""Autoregressive decoding with hard support constraints.

Motion generation emits the span opener, then only motion tokens or the span
closer, stopping at the closer (or force-closing at the length cap with a
truncation flag). Caption generation emits only text tokens, stopping at the
end-of-text token. Temperature 0 is greedy argmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..codec.tokenizer import MotionTokenSeq
from ..errors import GenerationError, ValidationError
from .model import AdapterSet, MotionLM
from .prompts import PromptTemplate


@dataclass(frozen=True)
class GenerationConfig:
    max_new_tokens: int = 96
    temperature: float = 1.0
    top_k: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.max_new_tokens < 2:
            raise ValidationError("need room for at least one motion token plus the closer")


def _pick(logits: torch.Tensor, allowed: torch.Tensor, cfg: GenerationConfig, gen: torch.Generator) -> int:
    masked = logits.masked_fill(~allowed, float("-inf"))
    if cfg.temperature == 0:
        return int(np.argmax(masked.numpy()))          # first index on exact ties
    scaled = masked / cfg.temperature
    if cfg.top_k is not None:
        kth = torch.topk(scaled, min(cfg.top_k, int(allowed.sum()))).values[-1]
        scaled = scaled.masked_fill(scaled < kth, float("-inf"))
    probs = torch.softmax(scaled, dim=-1)
    return int(torch.multinomial(probs, 1, generator=gen))


def _generation_prompt(model: MotionLM, description: str) -> list[int]:
    if not description.strip():
        raise ValidationError("description must be non-empty")
    vocab = model.vocab
    return [vocab.bos_id] + vocab.encode_text(PromptTemplate("generation").text) + vocab.encode_text(description)


def generate_motion_tokens_batch(
    model: MotionLM,
    adapters: AdapterSet | None,
    descriptions: list[str],
    cfg: GenerationConfig,
) -> list[MotionTokenSeq]:
    """Constrained decoding for a batch of descriptions; one shared seeded RNG."""
    vocab = model.vocab
    prompts = [_generation_prompt(model, d) for d in descriptions]
    n = len(prompts)
    width = max(len(p) for p in prompts) + cfg.max_new_tokens + 1
    if width > model.cfg.max_len:
        raise ValidationError(f"prompt plus budget ({width}) exceeds the model context {model.cfg.max_len}")
    buf = torch.full((n, width), vocab.pad_id, dtype=torch.long)
    lengths = []
    for i, p in enumerate(prompts):
        buf[i, : len(p)] = torch.tensor(p, dtype=torch.long)
        lengths.append(len(p))

    v = vocab.size
    in_span_support = torch.zeros(v, dtype=torch.bool)
    in_span_support[vocab.base_size : vocab.base_size + vocab.motion_count] = True
    in_span_support[vocab.motion_close_id] = True
    opener_only = torch.zeros(v, dtype=torch.bool)
    opener_only[vocab.motion_open_id] = True

    gen = torch.Generator().manual_seed(cfg.seed)
    emitted: list[list[int]] = [[] for _ in range(n)]
    opened = [False] * n
    done = [False] * n
    for _ in range(cfg.max_new_tokens):
        if all(done):
            break
        active = max(lengths)
        with torch.no_grad():
            logits = model.logits(buf[:, :active], adapters)
        for i in range(n):
            if done[i]:
                continue
            if not opened[i]:
                allowed = opener_only
            else:
                allowed = in_span_support.clone()
                if not emitted[i]:
                    allowed[vocab.motion_close_id] = False   # spans are non-empty
            tok = _pick(logits[i, lengths[i] - 1], allowed, cfg, gen)
            buf[i, lengths[i]] = tok
            lengths[i] += 1
            if not opened[i]:
                opened[i] = True
            elif tok == vocab.motion_close_id:
                done[i] = True
            else:
                emitted[i].append(vocab.motion_code(tok))
    # rows that ran out of budget are force-closed and flagged truncated
    return [MotionTokenSeq(ids=tuple(emitted[i]), bracketed=True, truncated=not done[i]) for i in range(n)]


def generate_motion_tokens(
    model: MotionLM,
    adapters: AdapterSet | None,
    description: str,
    cfg: GenerationConfig,
) -> MotionTokenSeq:
    return generate_motion_tokens_batch(model, adapters, [description], cfg)[0]


def generate_caption_batch(
    model: MotionLM,
    adapters: AdapterSet | None,
    token_seqs: list[MotionTokenSeq],
    cfg: GenerationConfig,
) -> list[str]:
    vocab = model.vocab
    header = [vocab.bos_id] + vocab.encode_text(PromptTemplate("captioning").text)
    prompts = []
    for toks in token_seqs:
        span = [vocab.motion_token_id(c) for c in toks.ids]
        prompts.append(header + [vocab.motion_open_id] + span + [vocab.motion_close_id])
    n = len(prompts)
    width = max(len(p) for p in prompts) + cfg.max_new_tokens
    if width > model.cfg.max_len:
        raise ValidationError(f"prompt plus budget ({width}) exceeds the model context {model.cfg.max_len}")
    buf = torch.full((n, width), vocab.pad_id, dtype=torch.long)
    lengths = []
    for i, p in enumerate(prompts):
        buf[i, : len(p)] = torch.tensor(p, dtype=torch.long)
        lengths.append(len(p))

    text_support = torch.zeros(vocab.size, dtype=torch.bool)
    text_support[: vocab.base_size] = True
    for special in (vocab.pad_id, vocab.bos_id, vocab.unk_id):
        text_support[special] = False

    gen = torch.Generator().manual_seed(cfg.seed)
    words: list[list[int]] = [[] for _ in range(n)]
    done = [False] * n
    for _ in range(cfg.max_new_tokens):
        if all(done):
            break
        active = max(lengths)
        with torch.no_grad():
            logits = model.logits(buf[:, :active], adapters)
        for i in range(n):
            if done[i]:
                continue
            tok = _pick(logits[i, lengths[i] - 1], text_support, cfg, gen)
            buf[i, lengths[i]] = tok
            lengths[i] += 1
            if tok == vocab.eos_id:
                done[i] = True
            else:
                words[i].append(tok)
    captions = []
    for i in range(n):
        if not words[i]:
            raise GenerationError("caption generation produced no tokens")
        captions.append(" ".join(vocab.decode(words[i])))
    return captions


def generate_caption(
    model: MotionLM,
    adapters: AdapterSet | None,
    tokens: MotionTokenSeq,
    cfg: GenerationConfig,
) -> str:
    return generate_caption_batch(model, adapters, [tokens], cfg)[0]
