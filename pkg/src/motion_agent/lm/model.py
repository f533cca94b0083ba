"""Decoder-only transformer with a frozen base and low-rank task adapters.

The base (text) weights are plain tensors that never enter an optimizer after
pre-training; fine-tuning touches only adapter factors and the appended motion
token rows, so frozen rows stay bit-identical by construction. Output logits are
tied to the embedding matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F

from ..artifacts import read_artifact, tensors_sha256, write_artifact
from ..errors import ConfigError, ValidationError, VocabularyError
from .vocab import Vocabulary

ATTN_SITES = ("attn.wq", "attn.wk", "attn.wv", "attn.wo")
FFN_SITES = ("ffn.w1", "ffn.w2")


@dataclass(frozen=True)
class LMConfig:
    hidden: int = 128
    blocks: int = 2
    heads: int = 4
    ffn: int = 512
    max_len: int = 256

    def __post_init__(self):
        if self.hidden % self.heads:
            raise ConfigError("hidden width must divide evenly into heads")

    def adapter_sites(self) -> list[str]:
        return [f"blk{i}.{s}" for i in range(self.blocks) for s in ATTN_SITES + FFN_SITES]


def _site_shape(cfg: LMConfig, site: str) -> tuple[int, int]:
    if site.endswith("ffn.w1"):
        return (cfg.ffn, cfg.hidden)
    if site.endswith("ffn.w2"):
        return (cfg.hidden, cfg.ffn)
    return (cfg.hidden, cfg.hidden)


def init_base_weights(cfg: LMConfig, vocab_size: int, seed: int, dtype: torch.dtype = torch.float32) -> dict[str, torch.Tensor]:
    gen = torch.Generator().manual_seed(seed)

    def mat(*shape):
        return (torch.randn(*shape, generator=gen, dtype=dtype) * 0.02).requires_grad_(True)

    w = {"tok_embed": mat(vocab_size, cfg.hidden)}
    for i in range(cfg.blocks):
        for site in ATTN_SITES + FFN_SITES:
            w[f"blk{i}.{site}"] = mat(*_site_shape(cfg, f"blk{i}.{site}"))
        for ln in ("ln1", "ln2"):
            w[f"blk{i}.{ln}.g"] = torch.ones(cfg.hidden, dtype=dtype).requires_grad_(True)
            w[f"blk{i}.{ln}.b"] = torch.zeros(cfg.hidden, dtype=dtype).requires_grad_(True)
    w["final_ln.g"] = torch.ones(cfg.hidden, dtype=dtype).requires_grad_(True)
    w["final_ln.b"] = torch.zeros(cfg.hidden, dtype=dtype).requires_grad_(True)
    return w


@dataclass
class AdapterSet:
    """Low-rank deltas for the adapted weight matrices plus the trained motion rows."""

    task: str
    rank: int
    alpha: float
    dropout: float
    a: dict[str, torch.Tensor]        # site -> (out, R), zero-initialized
    b: dict[str, torch.Tensor]        # site -> (R, in), seeded normal
    motion_embed: torch.Tensor        # (K+2, h)

    @property
    def scale(self) -> float:
        return self.alpha / self.rank

    def trainable_tensors(self) -> list[torch.Tensor]:
        return list(self.a.values()) + list(self.b.values()) + [self.motion_embed]

    def save(self, path, base_hash: str, extra: dict | None = None) -> str:
        cfg = {
            "task": self.task,
            "rank": self.rank,
            "alpha": self.alpha,
            "dropout": self.dropout,
            "sites": sorted(self.a),
            "base_hash": base_hash,
        }
        if extra:
            cfg.update(extra)
        tensors = {f"a.{s}": t.detach().numpy() for s, t in self.a.items()}
        tensors.update({f"b.{s}": t.detach().numpy() for s, t in self.b.items()})
        tensors["motion_embed"] = self.motion_embed.detach().numpy()
        return write_artifact(path, "lm-adapters", cfg, tensors)

    @classmethod
    def load(cls, path, expect_base_hash: str | None = None) -> "AdapterSet":
        _, cfg, tensors = read_artifact(path, expect_kind="lm-adapters")
        if expect_base_hash is not None and cfg["base_hash"] != expect_base_hash:
            raise ValidationError("adapter artifact was trained against a different base model")
        a = {s: torch.from_numpy(tensors[f"a.{s}"].copy()) for s in cfg["sites"]}
        b = {s: torch.from_numpy(tensors[f"b.{s}"].copy()) for s in cfg["sites"]}
        return cls(
            task=cfg["task"],
            rank=cfg["rank"],
            alpha=cfg["alpha"],
            dropout=cfg["dropout"],
            a=a,
            b=b,
            motion_embed=torch.from_numpy(tensors["motion_embed"].copy()),
        )


def _sinusoidal(max_len: int, hidden: int, dtype: torch.dtype) -> torch.Tensor:
    pos = torch.arange(max_len, dtype=dtype).unsqueeze(1)
    idx = torch.arange(0, hidden, 2, dtype=dtype)
    angle = pos / torch.pow(torch.tensor(10000.0, dtype=dtype), idx / hidden)
    pe = torch.zeros(max_len, hidden, dtype=dtype)
    pe[:, 0::2] = torch.sin(angle)
    pe[:, 1::2] = torch.cos(angle)
    return pe


def _linear(x, weight, site, adapters: AdapterSet | None, train: bool, generator):
    y = x @ weight.T
    if adapters is not None and site in adapters.a:
        xa = x
        if train and adapters.dropout > 0:
            keep = 1.0 - adapters.dropout
            mask = (torch.rand(x.shape, generator=generator, dtype=x.dtype) < keep).to(x.dtype) / keep
            xa = x * mask
        y = y + (xa @ adapters.b[site].T) @ adapters.a[site].T * adapters.scale
    return y


def lm_forward(
    cfg: LMConfig,
    weights: dict[str, torch.Tensor],
    embed: torch.Tensor,
    ids: torch.Tensor,
    adapters: AdapterSet | None = None,
    train: bool = False,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """Return logits (B, L, V) for token ids (B, L) under tied output weights."""
    if ids.ndim != 2:
        raise ValidationError("ids must be (batch, length)")
    b, length = ids.shape
    if length > cfg.max_len:
        raise ValidationError(f"sequence length {length} exceeds max_len {cfg.max_len}")
    dtype = embed.dtype
    x = embed[ids] + _sinusoidal(cfg.max_len, cfg.hidden, dtype)[:length]
    causal = torch.triu(torch.full((length, length), float("-inf"), dtype=dtype), diagonal=1)
    dh = cfg.hidden // cfg.heads
    for i in range(cfg.blocks):
        pre = f"blk{i}."
        h = F.layer_norm(x, (cfg.hidden,), weights[pre + "ln1.g"], weights[pre + "ln1.b"])
        q = _linear(h, weights[pre + "attn.wq"], pre + "attn.wq", adapters, train, generator)
        k = _linear(h, weights[pre + "attn.wk"], pre + "attn.wk", adapters, train, generator)
        v = _linear(h, weights[pre + "attn.wv"], pre + "attn.wv", adapters, train, generator)
        q = q.view(b, length, cfg.heads, dh).transpose(1, 2)
        k = k.view(b, length, cfg.heads, dh).transpose(1, 2)
        v = v.view(b, length, cfg.heads, dh).transpose(1, 2)
        scores = q @ k.transpose(-1, -2) / math.sqrt(dh) + causal
        att = torch.softmax(scores, dim=-1)
        ctx = (att @ v).transpose(1, 2).reshape(b, length, cfg.hidden)
        x = x + _linear(ctx, weights[pre + "attn.wo"], pre + "attn.wo", adapters, train, generator)
        h = F.layer_norm(x, (cfg.hidden,), weights[pre + "ln2.g"], weights[pre + "ln2.b"])
        h = F.gelu(_linear(h, weights[pre + "ffn.w1"], pre + "ffn.w1", adapters, train, generator))
        x = x + _linear(h, weights[pre + "ffn.w2"], pre + "ffn.w2", adapters, train, generator)
    x = F.layer_norm(x, (cfg.hidden,), weights["final_ln.g"], weights["final_ln.b"])
    return x @ embed.T


class BaseLM:
    """Text-only model; trainable until frozen by pre-training."""

    def __init__(self, cfg: LMConfig, vocab: Vocabulary, weights: dict[str, torch.Tensor]):
        if vocab.motion_count:
            raise ValidationError("base model takes an unextended vocabulary")
        self.cfg = cfg
        self.vocab = vocab
        self.weights = weights

    def logits(self, ids: torch.Tensor) -> torch.Tensor:
        return lm_forward(self.cfg, self.weights, self.weights["tok_embed"], ids)

    def freeze(self) -> None:
        for t in self.weights.values():
            t.detach_()
            t.requires_grad_(False)
            t.grad = None

    def weight_hash(self) -> str:
        return tensors_sha256({k: v.detach().numpy() for k, v in self.weights.items()})

    def save(self, path) -> str:
        cfg = {
            "hidden": self.cfg.hidden,
            "blocks": self.cfg.blocks,
            "heads": self.cfg.heads,
            "ffn": self.cfg.ffn,
            "max_len": self.cfg.max_len,
            "base_tokens": list(self.vocab.base_tokens),
            "frozen_hash": self.weight_hash(),
        }
        return write_artifact(path, "motion-lm-base", cfg, {k: v.detach().numpy() for k, v in self.weights.items()})

    @classmethod
    def load(cls, path) -> "BaseLM":
        _, cfg, tensors = read_artifact(path, expect_kind="motion-lm-base")
        model = cls(
            LMConfig(cfg["hidden"], cfg["blocks"], cfg["heads"], cfg["ffn"], cfg["max_len"]),
            Vocabulary(tuple(cfg["base_tokens"])),
            {k: torch.from_numpy(v.copy()) for k, v in tensors.items()},
        )
        model.freeze()
        if model.weight_hash() != cfg["frozen_hash"]:
            raise ValidationError(f"{path}: frozen-weight hash mismatch")
        return model


class MotionLM:
    """Frozen base plus motion-token rows; adapters are selected per call."""

    def __init__(self, cfg: LMConfig, vocab: Vocabulary, base: dict[str, torch.Tensor], motion_embed: torch.Tensor):
        if not vocab.motion_count:
            raise ValidationError("extended model needs a motion-extended vocabulary")
        if motion_embed.shape != (vocab.motion_count + 2, cfg.hidden):
            raise ValidationError("motion row block has the wrong shape")
        for t in base.values():
            t.requires_grad_(False)
        motion_embed.requires_grad_(False)
        self.cfg = cfg
        self.vocab = vocab
        self.base = base
        self.motion_embed = motion_embed   # initialization rows; task rows live in AdapterSet

    def embed_matrix(self, adapters: AdapterSet | None) -> torch.Tensor:
        rows = adapters.motion_embed if adapters is not None else self.motion_embed
        return torch.cat([self.base["tok_embed"], rows], dim=0)

    def logits(
        self,
        ids: torch.Tensor,
        adapters: AdapterSet | None = None,
        train: bool = False,
        generator: torch.Generator | None = None,
    ) -> torch.Tensor:
        if int(ids.max()) >= self.vocab.size:
            raise VocabularyError(f"token id {int(ids.max())} outside vocabulary of size {self.vocab.size}")
        return lm_forward(self.cfg, self.base, self.embed_matrix(adapters), ids, adapters, train, generator)

    def base_hash(self) -> str:
        return tensors_sha256({k: v.detach().numpy() for k, v in self.base.items()})

    def new_adapters(self, task: str, rank: int, alpha: float, dropout: float, seed: int) -> AdapterSet:
        gen = torch.Generator().manual_seed(seed)
        dtype = self.base["tok_embed"].dtype
        a, b = {}, {}
        for site in self.cfg.adapter_sites():
            out_dim, in_dim = _site_shape(self.cfg, site)
            a[site] = torch.zeros(out_dim, rank, dtype=dtype).requires_grad_(True)
            b[site] = (torch.randn(rank, in_dim, generator=gen, dtype=dtype) * 0.02).requires_grad_(True)
        rows = self.motion_embed.detach().clone().requires_grad_(True)
        return AdapterSet(task=task, rank=rank, alpha=alpha, dropout=dropout, a=a, b=b, motion_embed=rows)

    def save(self, path) -> str:
        cfg = {
            "hidden": self.cfg.hidden,
            "blocks": self.cfg.blocks,
            "heads": self.cfg.heads,
            "ffn": self.cfg.ffn,
            "max_len": self.cfg.max_len,
            "base_tokens": list(self.vocab.base_tokens),
            "motion_count": self.vocab.motion_count,
            "base_hash": self.base_hash(),
        }
        tensors = {f"base.{k}": v.detach().numpy() for k, v in self.base.items()}
        tensors["motion_embed"] = self.motion_embed.detach().numpy()
        return write_artifact(path, "motion-lm", cfg, tensors)

    @classmethod
    def load(cls, path) -> "MotionLM":
        _, cfg, tensors = read_artifact(path, expect_kind="motion-lm")
        base = {k[len("base.") :]: torch.from_numpy(v.copy()) for k, v in tensors.items() if k.startswith("base.")}
        model = cls(
            LMConfig(cfg["hidden"], cfg["blocks"], cfg["heads"], cfg["ffn"], cfg["max_len"]),
            Vocabulary(tuple(cfg["base_tokens"]), cfg["motion_count"]),
            base,
            torch.from_numpy(tensors["motion_embed"].copy()),
        )
        if model.base_hash() != cfg["base_hash"]:
            raise ValidationError(f"{path}: frozen-base hash mismatch")
        return model


def extend_vocabulary(base_model: BaseLM, motion_count: int, seed: int = 0) -> MotionLM:
    """Append K+2 embedding/output rows; base rows stay bit-identical.

    New rows draw from a seeded normal whose std matches the base embedding's
    empirical std, so fresh tokens start at the same scale as trained ones.
    """
    base_model.freeze()
    embed = base_model.weights["tok_embed"]
    std = float(embed.std())
    gen = torch.Generator().manual_seed(seed)
    rows = torch.randn(motion_count + 2, base_model.cfg.hidden, generator=gen, dtype=embed.dtype) * std
    vocab = base_model.vocab.extend(motion_count)
    return MotionLM(base_model.cfg, vocab, dict(base_model.weights), rows)
