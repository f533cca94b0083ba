"""Codec training loop: Adam on the encoder/decoder, EMA + resets on the codebook."""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass

import numpy as np
import torch

from ..data.synth import PairedCorpus
from ..errors import ConfigError, DivergenceError
from .codebook import codebook_reset, ema_update, init_codebook, quantize_latents, warm_start
from .losses import vq_terms
from .nets import CodecArch, FeatureScaler, build_nets
from .tokenizer import MotionCodec


@dataclass(frozen=True)
class CodecTrainConfig:
    codebook_size: int = 64
    latent_dim: int = 64
    width: int = 64
    downsample: int = 4
    alpha: float = 0.5
    beta: float = 0.02
    decay: float = 0.99
    epsilon: float = 1e-5
    reset_age: int = 256
    learning_rate: float = 2e-3
    batch_size: int = 16
    max_epochs: int = 60
    val_target: float | None = None    # absolute val L1; None trains to max_epochs
    window: int | None = None          # crop length; default: shortest train item, floored to N
    splice_prob: float = 0.25          # fraction of windows stitched from two items, so the
    seed: int = 0                      # decoder sees concatenation junctions in training

    def strides(self) -> tuple[int, ...]:
        n, out = self.downsample, []
        while n > 1:
            if n % 2:
                raise ConfigError("downsample rate must be a power of 2")
            out.append(2)
            n //= 2
        if not out:
            raise ConfigError("downsample rate must be >= 2")
        return tuple(out)


def full_profile() -> CodecTrainConfig:
    """The full-scale configuration (codebook and hidden width 512, downsample 4)."""
    return CodecTrainConfig(codebook_size=512, latent_dim=512, width=512, learning_rate=2e-4)


def pipeline_profile() -> CodecTrainConfig:
    """Codec profile used by the end-to-end pipeline.

    K=64 reconstructs the corpus but flattens rare side-specific cues; 128 codes
    with a longer schedule restore them at negligible extra cost.
    """
    return CodecTrainConfig(codebook_size=128, max_epochs=250)


def train_vq(corpus: PairedCorpus, config: CodecTrainConfig) -> tuple[MotionCodec, dict]:
    train_items = corpus.subset("train")
    val_items = corpus.subset("val") or train_items
    if not train_items:
        raise ConfigError("corpus has an empty train split")

    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        return _train(corpus, config, train_items, val_items)
    finally:
        torch.set_num_threads(n_threads)


def _train(corpus, config, train_items, val_items):
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    n = config.downsample
    skeleton = corpus.skeleton
    arch = CodecArch(
        feature_dim=skeleton.feature_dim,
        width=config.width,
        latent_dim=config.latent_dim,
        strides=config.strides(),
    )
    nets = build_nets(arch, seed=config.seed)
    scaler = FeatureScaler.fit([it.seq.frames for it in train_items])
    cb = init_codebook(
        config.codebook_size,
        config.latent_dim,
        decay=config.decay,
        epsilon=config.epsilon,
        seed=config.seed,
    )
    reset_gen = torch.Generator().manual_seed(config.seed + 17)
    opt = torch.optim.Adam(nets.parameters(), lr=config.learning_rate)

    window = config.window or (min(it.seq.num_frames for it in train_items) // n) * n
    if window < n:
        raise ConfigError("training window shorter than one latent frame")
    frames_by_item = [it.seq.frames for it in train_items]

    half = (window // 2 // n) * n

    def sample_window(i):
        o = int(rng.integers(0, frames_by_item[i].shape[0] - window + 1))
        return frames_by_item[i][o : o + window]

    def batch_windows(indices):
        stack = []
        for i in indices:
            if config.splice_prob > 0 and half >= n and rng.uniform() < config.splice_prob:
                j = int(rng.integers(0, len(frames_by_item)))
                a, b = sample_window(int(i)), sample_window(j)
                stack.append(np.concatenate([a[:half], b[: window - half]]))
            else:
                stack.append(sample_window(int(i)))
        return torch.from_numpy(np.stack(stack))

    log = {
        "epochs": [],
        "untrained_val_recon": _val_recon(nets, cb, val_items, n, scaler),
        "config": asdict(config),
    }
    best = None
    warm = False
    step = 0
    for epoch in range(config.max_epochs):
        order = rng.permutation(len(train_items))
        epoch_terms = []
        snapshot = (copy.deepcopy(nets.state_dict()), cb)
        try:
            for start in range(0, len(order), config.batch_size):
                idx = order[start : start + config.batch_size]
                batch = batch_windows(idx)
                if not warm:
                    with torch.no_grad():
                        z0 = nets.encode(scaler.normalize(batch)).reshape(-1, config.latent_dim)
                    cb = warm_start(cb, z0, seed=config.seed + 29)
                    warm = True
                terms = vq_terms(nets, cb, batch, skeleton.joint_count, config.alpha, config.beta, scaler=scaler)
                if not torch.isfinite(terms["total"]):
                    raise DivergenceError(f"non-finite loss at epoch {epoch} step {step}")
                opt.zero_grad()
                terms["total"].backward()
                opt.step()
                flat = terms["z"].detach().reshape(-1, config.latent_dim)
                cb = ema_update(cb, flat, terms["ids"])
                cb = codebook_reset(cb, flat, config.reset_age, reset_gen)
                epoch_terms.append({k: float(terms[k].detach()) for k in ("total", "recon", "joint", "commit")})
                step += 1
        except DivergenceError:
            if best is None:
                raise
            nets.load_state_dict(snapshot[0])
            cb = snapshot[1]
            log["diverged_at_epoch"] = epoch
            break

        val_recon = _val_recon(nets, cb, val_items, n, scaler)
        log["epochs"].append(
            {
                "epoch": epoch,
                "train": {k: float(np.mean([t[k] for t in epoch_terms])) for k in epoch_terms[0]},
                "val_recon": val_recon,
                "live_fraction": cb.live_fraction(config.reset_age),
            }
        )
        best = (copy.deepcopy(nets.state_dict()), cb)
        if config.val_target is not None and val_recon <= config.val_target:
            break

    log["final_val_recon"] = log["epochs"][-1]["val_recon"] if log["epochs"] else None
    log["live_fraction"] = cb.live_fraction(config.reset_age)
    codec = MotionCodec(nets, cb, skeleton, fps=train_items[0].seq.fps, scaler=scaler, meta={"training": asdict(config)})
    return codec, log


def _val_recon(nets, cb, items, n, scaler) -> float:
    """Mean L1 reconstruction error on full sequences, in scaled feature units."""
    total, count = 0.0, 0
    with torch.no_grad():
        for it in items:
            frames = it.seq.frames
            rem = (-frames.shape[0]) % n
            if rem:
                frames = np.concatenate([frames, np.repeat(frames[-1:], rem, axis=0)])
            x = scaler.normalize(torch.from_numpy(frames).unsqueeze(0))
            z = nets.encode(x)
            ids, zq = quantize_latents(cb, z.reshape(-1, z.shape[-1]))
            m_hat = nets.decode(zq.reshape(z.shape))
            total += float((x - m_hat).abs().mean()) * frames.shape[0]
            count += frames.shape[0]
    return total / max(count, 1)
