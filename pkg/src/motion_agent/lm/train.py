"""Base pre-training (full weights) and task fine-tuning (adapters + motion rows only)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn.functional as F

from ..codec.tokenizer import MotionCodec
from ..data.synth import PairedCorpus
from ..errors import ConfigError, ContractViolationError, DivergenceError
from .model import AdapterSet, BaseLM, LMConfig, MotionLM, init_base_weights
from .prompts import PromptTemplate
from .vocab import Vocabulary, build_base_vocabulary

IGNORE = -100

# small generic filler so the base model sees text beyond the caption domain
GENERIC_TEXT = [
    "the quick brown fox jumps over the lazy dog",
    "people move through the world in many different ways",
    "every motion tells a story about intent and mood",
    "he stands still and looks around the quiet room",
    "she runs across the field and waves at her friends",
    "they sit down to rest after a long day of work",
    "the dancer spins and leaps across the bright stage",
    "a child hops over a puddle and laughs out loud",
    "the old man walks his dog along the river every morning",
    "climbers pull themselves up the steep rocky wall",
    "first she looks around and then she walks away",
]


@dataclass(frozen=True)
class PretrainConfig:
    model: LMConfig = LMConfig()
    epochs: int = 40
    batch_size: int = 32
    learning_rate: float = 3e-3
    val_fraction: float = 0.1
    seed: int = 0


@dataclass(frozen=True)
class FinetuneConfig:
    rank: int = 8
    alpha: float = 8.0
    dropout: float = 0.1
    epochs: int = 120
    batch_size: int = 16
    learning_rate: float = 2e-3
    seed: int = 0


def full_finetune_profile(task: str) -> FinetuneConfig:
    """Full-scale hyper-parameters: batch 6, lr 1e-5, rank 64 (generation) / 32 (captioning)."""
    rank = 64 if task == "generation" else 32
    return FinetuneConfig(rank=rank, alpha=32.0, dropout=0.1, batch_size=6, learning_rate=1e-5)


def _pad_batch(rows: list[list[int]], pad: int) -> torch.Tensor:
    width = max(len(r) for r in rows)
    out = torch.full((len(rows), width), pad, dtype=torch.long)
    for i, r in enumerate(rows):
        out[i, : len(r)] = torch.tensor(r, dtype=torch.long)
    return out


def pretrain_base(texts: list[str], config: PretrainConfig) -> tuple[BaseLM, dict]:
    """Next-token training over caption-side text; the result is frozen and hash-stamped."""
    if not texts:
        raise ConfigError("empty pre-training corpus")
    vocab = build_base_vocabulary(texts)
    torch.manual_seed(config.seed)
    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        weights = init_base_weights(config.model, vocab.base_size, config.seed)
        model = BaseLM(config.model, vocab, weights)
        seqs = [[vocab.bos_id] + vocab.encode_text(t) + [vocab.eos_id] for t in texts]
        rng = np.random.default_rng(config.seed)
        order = rng.permutation(len(seqs))
        n_val = max(1, int(config.val_fraction * len(seqs)))
        val = [seqs[i] for i in order[:n_val]]
        train = [seqs[i] for i in order[n_val:]]

        opt = torch.optim.Adam(weights.values(), lr=config.learning_rate)
        log = {"epochs": [], "config": {"epochs": config.epochs, "lr": config.learning_rate}}
        for epoch in range(config.epochs):
            perm = rng.permutation(len(train))
            losses = []
            for start in range(0, len(perm), config.batch_size):
                rows = [train[i] for i in perm[start : start + config.batch_size]]
                ids = _pad_batch(rows, vocab.pad_id)
                labels = ids.clone()
                labels[labels == vocab.pad_id] = IGNORE
                logits = model.logits(ids[:, :-1])
                loss = F.cross_entropy(logits.reshape(-1, logits.shape[-1]), labels[:, 1:].reshape(-1), ignore_index=IGNORE)
                if not torch.isfinite(loss):
                    raise DivergenceError(f"pre-training diverged at epoch {epoch}")
                opt.zero_grad()
                loss.backward()
                opt.step()
                losses.append(float(loss.detach()))
            log["epochs"].append({"epoch": epoch, "train_nll": float(np.mean(losses)), "val_nll": _eval_nll(model, val)})
        model.freeze()
        log["val_nll"] = log["epochs"][-1]["val_nll"]
        log["val_perplexity"] = float(np.exp(log["val_nll"]))
        log["frozen_hash"] = model.weight_hash()
        log["val_texts_idx"] = [int(i) for i in order[:n_val]]
        return model, log
    finally:
        torch.set_num_threads(n_threads)


def _eval_nll(model: BaseLM, seqs: list[list[int]]) -> float:
    total, count = 0.0, 0
    with torch.no_grad():
        for seq in seqs:
            ids = torch.tensor([seq], dtype=torch.long)
            logits = model.logits(ids[:, :-1])
            lp = F.log_softmax(logits, dim=-1)
            tgt = ids[:, 1:]
            total += float(-lp.gather(2, tgt.unsqueeze(-1)).sum())
            count += tgt.numel()
    return total / max(count, 1)


def build_examples(
    corpus: PairedCorpus,
    codec: MotionCodec,
    vocab: Vocabulary,
    task: str,
    split: str = "train",
    concat_pairs: int = 0,
    seed: int = 0,
) -> list[tuple[list[int], list[int]]]:
    """(prompt ids, target ids) pairs for teacher-forced fine-tuning.

    ``concat_pairs`` (captioning only) adds examples whose motion span is the
    concatenation of two items' tokens with an "A and then B" caption, so the
    captioner stays usable on the multi-call motions the coordinator produces.
    """
    template = PromptTemplate(task)
    header = [vocab.bos_id] + vocab.encode_text(template.text)
    examples = []
    items = corpus.subset(split)
    token_cache = {it.item_id: codec.tokenize(it.seq).ids for it in items}
    for item in items:
        motion_ids = [vocab.motion_token_id(c) for c in token_cache[item.item_id]]
        span = [vocab.motion_open_id] + motion_ids + [vocab.motion_close_id]
        for ann in item.annotations:
            caption_ids = vocab.encode_text(ann.text)
            if task == "generation":
                examples.append((header + caption_ids, span))
            else:
                examples.append((header + span, caption_ids + [vocab.eos_id]))
    if task == "captioning" and concat_pairs > 0:
        rng = np.random.default_rng(seed)
        for _ in range(concat_pairs):
            a, b = (items[int(i)] for i in rng.choice(len(items), size=2, replace=False))
            codes = token_cache[a.item_id] + token_cache[b.item_id]
            span = [vocab.motion_open_id] + [vocab.motion_token_id(c) for c in codes] + [vocab.motion_close_id]
            caption = f"{a.annotations[0].text} and then {b.annotations[0].text}"
            examples.append((header + span, vocab.encode_text(caption) + [vocab.eos_id]))
    return examples


def teacher_forced_nll(model: MotionLM, adapters: AdapterSet | None, examples, batch_size: int = 32) -> float:
    """Mean NLL per target token under teacher forcing."""
    vocab = model.vocab
    total, count = 0.0, 0
    with torch.no_grad():
        for start in range(0, len(examples), batch_size):
            chunk = examples[start : start + batch_size]
            ids = _pad_batch([p + t for p, t in chunk], vocab.pad_id)
            labels = torch.full_like(ids, IGNORE)
            for i, (p, t) in enumerate(chunk):
                labels[i, len(p) : len(p) + len(t)] = torch.tensor(t, dtype=torch.long)
            logits = model.logits(ids[:, :-1], adapters)
            lp = F.log_softmax(logits, dim=-1)
            tgt = labels[:, 1:]
            mask = tgt != IGNORE
            picked = lp.gather(2, tgt.clamp(min=0).unsqueeze(-1)).squeeze(-1)
            total += float(-(picked * mask).sum())
            count += int(mask.sum())
    return total / max(count, 1)


def finetune_adapters(
    model: MotionLM,
    examples: list[tuple[list[int], list[int]]],
    task: str,
    config: FinetuneConfig,
) -> tuple[AdapterSet, dict]:
    """Train adapters and the new token rows; the frozen base is hash-checked every epoch."""
    if not examples:
        raise ConfigError("no fine-tuning examples")
    vocab = model.vocab
    frozen_hash = model.base_hash()
    for name, tensor in model.base.items():
        if tensor.requires_grad:
            raise ContractViolationError(f"frozen base tensor {name} is marked trainable")

    torch.manual_seed(config.seed)
    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        adapters = model.new_adapters(task, config.rank, config.alpha, config.dropout, config.seed)
        opt = torch.optim.Adam(adapters.trainable_tensors(), lr=config.learning_rate)
        rng = np.random.default_rng(config.seed)
        gen = torch.Generator().manual_seed(config.seed + 1)
        log = {"task": task, "epochs": [], "init_nll": teacher_forced_nll(model, adapters, examples), "config": asdict(config)}
        for epoch in range(config.epochs):
            perm = rng.permutation(len(examples))
            losses = []
            for start in range(0, len(perm), config.batch_size):
                chunk = [examples[i] for i in perm[start : start + config.batch_size]]
                ids = _pad_batch([p + t for p, t in chunk], vocab.pad_id)
                labels = torch.full_like(ids, IGNORE)
                for i, (p, t) in enumerate(chunk):
                    labels[i, len(p) : len(p) + len(t)] = torch.tensor(t, dtype=torch.long)
                logits = model.logits(ids[:, :-1], adapters, train=True, generator=gen)
                loss = F.cross_entropy(
                    logits.reshape(-1, logits.shape[-1]), labels[:, 1:].reshape(-1), ignore_index=IGNORE
                )
                if not torch.isfinite(loss):
                    raise DivergenceError(f"fine-tuning diverged at epoch {epoch}")
                opt.zero_grad()
                loss.backward()
                for name, tensor in model.base.items():
                    if tensor.grad is not None and float(tensor.grad.abs().sum()) != 0.0:
                        raise ContractViolationError(f"frozen base tensor {name} received gradient")
                opt.step()
                losses.append(float(loss.detach()))
            if model.base_hash() != frozen_hash:
                raise ContractViolationError("frozen base weights changed during fine-tuning")
            log["epochs"].append({"epoch": epoch, "train_nll": float(np.mean(losses))})
        log["final_nll"] = teacher_forced_nll(model, adapters, examples)
        log["base_hash"] = frozen_hash
        return adapters, log
    finally:
        torch.set_num_threads(n_threads)
