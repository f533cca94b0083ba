"""Temporal convolution encoder/decoder pair with exact downsample/upsample symmetry."""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from ..errors import ConfigError, LengthError


@dataclass(frozen=True)
class FeatureScaler:
    """Per-channel z-score scaling; keeps rad/frame and meter channels commensurate."""

    mean: torch.Tensor   # (D,)
    std: torch.Tensor    # (D,) floored away from zero

    @classmethod
    def fit(cls, frames_list: list, floor: float = 1e-3) -> "FeatureScaler":
        import numpy as np

        stacked = np.concatenate([np.asarray(f) for f in frames_list], axis=0)
        mean = torch.from_numpy(stacked.mean(axis=0).astype("f4"))
        std = torch.from_numpy(np.maximum(stacked.std(axis=0), floor).astype("f4"))
        return cls(mean=mean, std=std)

    @classmethod
    def identity(cls, d: int) -> "FeatureScaler":
        return cls(mean=torch.zeros(d), std=torch.ones(d))

    def normalize(self, frames: torch.Tensor) -> torch.Tensor:
        return (frames - self.mean.to(frames.dtype)) / self.std.to(frames.dtype)

    def denormalize(self, frames: torch.Tensor) -> torch.Tensor:
        return frames * self.std.to(frames.dtype) + self.mean.to(frames.dtype)


@dataclass(frozen=True)
class CodecArch:
    feature_dim: int
    width: int = 64
    latent_dim: int = 64
    strides: tuple[int, ...] = (2, 2)

    def __post_init__(self):
        if any(s < 2 or s % 2 for s in self.strides):
            raise ConfigError("encoder strides must be even and >= 2")
        if min(self.feature_dim, self.width, self.latent_dim) < 1:
            raise ConfigError("bad codec dimensions")

    @property
    def downsample(self) -> int:
        n = 1
        for s in self.strides:
            n *= s
        return n


class MotionEncoder(nn.Module):
    def __init__(self, arch: CodecArch):
        super().__init__()
        layers: list[nn.Module] = []
        ch = arch.feature_dim
        for s in arch.strides:
            layers += [nn.Conv1d(ch, arch.width, kernel_size=2 * s, stride=s, padding=s // 2), nn.ReLU()]
            ch = arch.width
        layers.append(nn.Conv1d(ch, arch.latent_dim, kernel_size=3, padding=1))
        self.net = nn.Sequential(*layers)
        self.arch = arch

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        """(B, T, D) -> (B, T/N, d); T must be a multiple of the downsample rate."""
        n = self.arch.downsample
        if frames.shape[1] % n:
            raise LengthError(f"T={frames.shape[1]} is not a multiple of the downsample rate {n}")
        return self.net(frames.transpose(1, 2)).transpose(1, 2)


class MotionDecoder(nn.Module):
    def __init__(self, arch: CodecArch):
        super().__init__()
        layers: list[nn.Module] = [nn.Conv1d(arch.latent_dim, arch.width, kernel_size=3, padding=1), nn.ReLU()]
        for s in reversed(arch.strides):
            layers += [
                nn.Upsample(scale_factor=s, mode="nearest"),
                nn.Conv1d(arch.width, arch.width, kernel_size=5, padding=2),
                nn.ReLU(),
            ]
        layers.append(nn.Conv1d(arch.width, arch.feature_dim, kernel_size=3, padding=1))
        self.net = nn.Sequential(*layers)
        self.arch = arch

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        """(B, T/N, d) -> (B, T, D)."""
        return self.net(z.transpose(1, 2)).transpose(1, 2)


class CodecNets(nn.Module):
    """Encoder/decoder pair; the trainable half of the codec."""

    def __init__(self, arch: CodecArch):
        super().__init__()
        self.arch = arch
        self.encoder = MotionEncoder(arch)
        self.decoder = MotionDecoder(arch)

    def encode(self, frames: torch.Tensor) -> torch.Tensor:
        return self.encoder(frames)

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        return self.decoder(z)


def build_nets(arch: CodecArch, seed: int = 0, dtype: torch.dtype = torch.float32) -> CodecNets:
    torch.manual_seed(seed)
    nets = CodecNets(arch)
    return nets.to(dtype)
