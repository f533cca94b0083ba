"""EMA-trained codebook: nearest-code quantization, moving-average updates, dead-code resets.

The codebook receives no gradient; it learns through exponential moving averages
of assignment counts and sums, with long-unused codes re-seeded from current
encoder outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import torch

from ..errors import ValidationError


@dataclass(frozen=True)
class Codebook:
    codes: torch.Tensor             # (K, d)
    ema_cluster_size: torch.Tensor  # (K,)
    ema_embed_sum: torch.Tensor     # (K, d)
    usage_age: torch.Tensor         # (K,) long; 0 iff assigned in the latest update
    decay: float = 0.99
    epsilon: float = 1e-5

    def __post_init__(self):
        k, d = self.codes.shape
        if k < 2 or d < 1:
            raise ValidationError("codebook needs K >= 2 and d >= 1")
        if not (0.0 < self.decay < 1.0) or self.epsilon <= 0:
            raise ValidationError("decay must be in (0,1) and epsilon positive")
        if not torch.isfinite(self.codes).all():
            raise ValidationError("codebook codes must be finite")
        if (self.ema_cluster_size < 0).any():
            raise ValidationError("ema_cluster_size must be non-negative")

    @property
    def size(self) -> int:
        return self.codes.shape[0]

    @property
    def dim(self) -> int:
        return self.codes.shape[1]

    def live_fraction(self, age_threshold: int) -> float:
        return float((self.usage_age < age_threshold).to(torch.float64).mean())


def init_codebook(
    k: int,
    d: int,
    *,
    decay: float = 0.99,
    epsilon: float = 1e-5,
    seed: int = 0,
    dtype: torch.dtype = torch.float32,
) -> Codebook:
    gen = torch.Generator().manual_seed(seed)
    codes = torch.randn(k, d, generator=gen, dtype=dtype) * 0.1
    return Codebook(
        codes=codes,
        ema_cluster_size=torch.ones(k, dtype=dtype),
        ema_embed_sum=codes.clone(),
        usage_age=torch.zeros(k, dtype=torch.long),
        decay=decay,
        epsilon=epsilon,
    )


def warm_start(cb: Codebook, z_batch: torch.Tensor, seed: int = 0) -> Codebook:
    """Re-seed all codes from encoder outputs (tiled + jittered when the batch is small)."""
    gen = torch.Generator().manual_seed(seed)
    m = z_batch.shape[0]
    if m < cb.size:
        reps = (cb.size + m - 1) // m
        tiled = z_batch.repeat(reps, 1)
        tiled = tiled + 0.01 / np.sqrt(cb.dim) * torch.randn(tiled.shape, generator=gen, dtype=z_batch.dtype)
    else:
        tiled = z_batch
    order = torch.randperm(tiled.shape[0], generator=gen)[: cb.size]
    codes = tiled[order].clone()
    return replace(
        cb,
        codes=codes,
        ema_cluster_size=torch.ones(cb.size, dtype=codes.dtype),
        ema_embed_sum=codes.clone(),
        usage_age=torch.zeros(cb.size, dtype=torch.long),
    )


def quantize_latents(cb: Codebook, z: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Nearest code per row of ``z`` (M, d) by Euclidean distance, ties to the lowest index.

    Returns (ids, gathered codes). No gradient flows through either output.
    """
    if z.ndim != 2 or z.shape[1] != cb.dim:
        raise ValidationError(f"latents must be (M, {cb.dim})")
    with torch.no_grad():
        ids_parts = []
        codes = cb.codes.to(z.dtype)
        for chunk in torch.split(z, 4096):
            d2 = ((chunk[:, None, :] - codes[None, :, :]) ** 2).sum(-1)
            # numpy argmin guarantees first-occurrence tie-breaking
            ids_parts.append(torch.from_numpy(np.argmin(d2.cpu().numpy(), axis=1)))
        ids = torch.cat(ids_parts).to(torch.long)
    return ids, cb.codes[ids].to(z.dtype)


def ema_update(cb: Codebook, z_batch: torch.Tensor, assignments: torch.Tensor) -> Codebook:
    """One EMA step from a batch of latents and their quantization assignments."""
    if z_batch.shape[0] != assignments.shape[0]:
        raise ValidationError("z_batch and assignments must pair up")
    k = cb.size
    dtype = cb.codes.dtype
    z = z_batch.detach().to(dtype)
    counts = torch.bincount(assignments, minlength=k).to(dtype)
    sums = torch.zeros(k, cb.dim, dtype=dtype)
    sums.index_add_(0, assignments, z)

    g = cb.decay
    new_size = g * cb.ema_cluster_size + (1.0 - g) * counts
    new_sum = g * cb.ema_embed_sum + (1.0 - g) * sums
    total = new_size.sum()
    smoothed = (new_size + cb.epsilon) / (total + k * cb.epsilon) * total
    codes = new_sum / smoothed.unsqueeze(1)
    age = torch.where(counts > 0, torch.zeros_like(cb.usage_age), cb.usage_age + 1)
    return replace(cb, codes=codes, ema_cluster_size=new_size, ema_embed_sum=new_sum, usage_age=age)


def codebook_reset(cb: Codebook, z_batch: torch.Tensor, age_threshold: int, generator: torch.Generator) -> Codebook:
    """Re-seed codes unused for ``age_threshold`` updates from random encoder outputs."""
    if z_batch.shape[0] == 0:
        raise ValidationError("z_batch must be non-empty")
    stale = cb.usage_age >= age_threshold
    n = int(stale.sum())
    if n == 0:
        return cb
    pick = torch.randint(z_batch.shape[0], (n,), generator=generator)
    fresh = z_batch.detach().to(cb.codes.dtype)[pick]
    codes = cb.codes.clone()
    size = cb.ema_cluster_size.clone()
    sums = cb.ema_embed_sum.clone()
    age = cb.usage_age.clone()
    codes[stale] = fresh
    size[stale] = 1.0
    sums[stale] = fresh
    age[stale] = 0
    return replace(cb, codes=codes, ema_cluster_size=size, ema_embed_sum=sums, usage_age=age)
