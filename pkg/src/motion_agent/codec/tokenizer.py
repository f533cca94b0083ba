"""Frozen motion tokenizer/detokenizer and the token text wire format.

Detokenization of a concatenated token sequence runs the decoder ONCE over the
whole latent sequence, so its temporal receptive field spans call boundaries;
that joint decode is what smooths transitions between concatenated motions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..artifacts import read_artifact, write_artifact
from ..data.motion import MotionSequence
from ..data.skeleton import SkeletonSpec
from ..errors import FormatError, ValidationError, VocabularyError
from .codebook import Codebook, quantize_latents
from .nets import CodecArch, CodecNets, FeatureScaler

MOTION_OPEN = "<Motion>"
MOTION_CLOSE = "</Motion>"

_TOKEN_RE = re.compile(r"^<Motion_(\d+)>$")


@dataclass(frozen=True)
class MotionTokenSeq:
    ids: tuple[int, ...]
    bracketed: bool = True
    true_frames: int | None = None   # pre-padding frame count, for trim on detokenize
    truncated: bool = False          # generation hit its length cap and was force-closed

    def __post_init__(self):
        ids = tuple(int(i) for i in self.ids)
        object.__setattr__(self, "ids", ids)
        if len(ids) < 1:
            raise ValidationError("token sequence must be non-empty")
        if any(i < 0 for i in ids):
            raise ValidationError("token ids must be non-negative")

    def __len__(self) -> int:
        return len(self.ids)

    def to_text(self) -> str:
        body = " ".join(f"<Motion_{i}>" for i in self.ids)
        if self.bracketed:
            return f"{MOTION_OPEN} {body} {MOTION_CLOSE}"
        return body


def concat_tokens(parts: list[MotionTokenSeq]) -> MotionTokenSeq:
    if not parts:
        raise ValidationError("nothing to concatenate")
    ids: tuple[int, ...] = ()
    for p in parts:
        ids = ids + p.ids
    return MotionTokenSeq(ids=ids, bracketed=True, true_frames=None)


def parse_token_text(text: str) -> MotionTokenSeq:
    words = text.split()
    bracketed = False
    if words and words[0] == MOTION_OPEN:
        if not words or words[-1] != MOTION_CLOSE:
            raise FormatError(f"unterminated token text: {text!r}")
        words = words[1:-1]
        bracketed = True
    ids = []
    for w in words:
        m = _TOKEN_RE.match(w)
        if not m:
            raise FormatError(f"not a motion token: {w!r}")
        ids.append(int(m.group(1)))
    return MotionTokenSeq(ids=tuple(ids), bracketed=bracketed)


class MotionCodec:
    """Frozen codec artifact: encode/quantize/decode with immutable weights."""

    def __init__(
        self,
        nets: CodecNets,
        codebook: Codebook,
        skeleton: SkeletonSpec,
        fps: float,
        scaler: FeatureScaler | None = None,
        meta: dict | None = None,
    ):
        nets.eval()
        for p in nets.parameters():
            p.requires_grad_(False)
        self.nets = nets
        self.codebook = codebook
        self.skeleton = skeleton
        self.fps = fps
        self.scaler = scaler or FeatureScaler.identity(nets.arch.feature_dim)
        self.meta = dict(meta or {})

    @property
    def downsample(self) -> int:
        return self.nets.arch.downsample

    @property
    def codebook_size(self) -> int:
        return self.codebook.size

    def _dtype(self) -> torch.dtype:
        return next(self.nets.parameters()).dtype

    def pad_frames(self, frames: np.ndarray) -> tuple[np.ndarray, int]:
        """Repeat the last frame up to the next multiple of the downsample rate."""
        t = frames.shape[0]
        n = self.downsample
        rem = (-t) % n
        if rem:
            frames = np.concatenate([frames, np.repeat(frames[-1:], rem, axis=0)])
        return frames, t

    def encode(self, seq: MotionSequence) -> torch.Tensor:
        frames = torch.from_numpy(seq.frames).to(self._dtype()).unsqueeze(0)
        with torch.no_grad():
            return self.nets.encode(self.scaler.normalize(frames)).squeeze(0)

    def tokenize(self, seq: MotionSequence) -> MotionTokenSeq:
        padded, true_t = self.pad_frames(seq.frames)
        frames = torch.from_numpy(padded).to(self._dtype()).unsqueeze(0)
        with torch.no_grad():
            z = self.nets.encode(self.scaler.normalize(frames)).squeeze(0)
        ids, _ = quantize_latents(self.codebook, z)
        return MotionTokenSeq(ids=tuple(ids.tolist()), bracketed=True, true_frames=true_t)

    def detokenize(
        self,
        tokens: MotionTokenSeq | list[int],
        boundaries: tuple[int, ...] = (),
        crossfade_frames: int = 0,
    ) -> MotionSequence:
        """Decode token ids (possibly a concatenation of several calls) as one sequence.

        ``boundaries`` are token indices where one call's tokens end and the next
        begin; used only by the optional (off by default) linear crossfade.
        """
        if isinstance(tokens, MotionTokenSeq):
            ids, true_t = tokens.ids, tokens.true_frames
        else:
            ids, true_t = tuple(int(i) for i in tokens), None
        if not ids:
            raise ValidationError("token sequence must be non-empty")
        bad = [i for i in ids if i >= self.codebook_size]
        if bad:
            raise VocabularyError(f"token id {bad[0]} outside codebook of size {self.codebook_size}")
        zq = self.codebook.codes[torch.tensor(ids, dtype=torch.long)].to(self._dtype()).unsqueeze(0)
        with torch.no_grad():
            decoded = self.scaler.denormalize(self.nets.decode(zq))
            frames = decoded.squeeze(0).numpy().astype(np.float32)
        if crossfade_frames > 0:
            frames = _linear_crossfade(frames, boundaries, self.downsample, crossfade_frames)
        if true_t is not None:
            frames = frames[:true_t]
        frames[:, 3] = np.maximum(frames[:, 3], 0.0)   # decoded root height stays physical
        return MotionSequence(frames=frames, fps=self.fps, skeleton=self.skeleton)

    def reconstruct(self, seq: MotionSequence) -> MotionSequence:
        return self.detokenize(self.tokenize(seq))

    def save(self, path: str | Path, training_config: dict | None = None) -> str:
        cfg = {
            "codebook_size": self.codebook.size,
            "latent_dim": self.codebook.dim,
            "downsample": self.downsample,
            "width": self.nets.arch.width,
            "strides": list(self.nets.arch.strides),
            "feature_dim": self.nets.arch.feature_dim,
            "decay": self.codebook.decay,
            "epsilon": self.codebook.epsilon,
            "fps": self.fps,
            "skeleton_hash": self.skeleton.content_hash(),
            "skeleton": {
                "joint_names": list(self.skeleton.joint_names),
                "parent": self.skeleton.parent.tolist(),
                "bone_offsets": self.skeleton.bone_offsets.tolist(),
            },
            "training": training_config or self.meta.get("training", {}),
        }
        tensors = {f"nets.{k}": v.detach().numpy() for k, v in self.nets.state_dict().items()}
        tensors["scaler.mean"] = self.scaler.mean.numpy()
        tensors["scaler.std"] = self.scaler.std.numpy()
        tensors["codebook.codes"] = self.codebook.codes.numpy()
        tensors["codebook.ema_cluster_size"] = self.codebook.ema_cluster_size.numpy()
        tensors["codebook.ema_embed_sum"] = self.codebook.ema_embed_sum.numpy()
        tensors["codebook.usage_age"] = self.codebook.usage_age.numpy()
        return write_artifact(path, "vq-codec", cfg, tensors)

    @classmethod
    def load(cls, path: str | Path) -> "MotionCodec":
        _, cfg, tensors = read_artifact(path, expect_kind="vq-codec")
        arch = CodecArch(
            feature_dim=cfg["feature_dim"],
            width=cfg["width"],
            latent_dim=cfg["latent_dim"],
            strides=tuple(cfg["strides"]),
        )
        nets = CodecNets(arch)
        state = {k[len("nets.") :]: torch.from_numpy(v.copy()) for k, v in tensors.items() if k.startswith("nets.")}
        nets.load_state_dict(state)
        cb = Codebook(
            codes=torch.from_numpy(tensors["codebook.codes"].copy()),
            ema_cluster_size=torch.from_numpy(tensors["codebook.ema_cluster_size"].copy()),
            ema_embed_sum=torch.from_numpy(tensors["codebook.ema_embed_sum"].copy()),
            usage_age=torch.from_numpy(tensors["codebook.usage_age"].copy()),
            decay=cfg["decay"],
            epsilon=cfg["epsilon"],
        )
        sk = cfg["skeleton"]
        skeleton = SkeletonSpec(tuple(sk["joint_names"]), np.asarray(sk["parent"]), np.asarray(sk["bone_offsets"]))
        scaler = FeatureScaler(
            mean=torch.from_numpy(tensors["scaler.mean"].copy()),
            std=torch.from_numpy(tensors["scaler.std"].copy()),
        )
        return cls(nets, cb, skeleton, cfg["fps"], scaler=scaler, meta={"training": cfg.get("training", {})})


def _linear_crossfade(frames: np.ndarray, boundaries: tuple[int, ...], downsample: int, w: int) -> np.ndarray:
    out = frames.copy()
    t = frames.shape[0]
    for b_tok in boundaries:
        fb = b_tok * downsample
        if not (0 < fb < t):
            continue
        left = out[fb - 1]
        for i in range(min(w, t - fb)):
            u = (i + 1) / (w + 1)
            out[fb + i] = (1.0 - u) * left + u * frames[fb + i]
    return out
