"""Deterministic feature extractor shared by motion and text metrics.

Replaces the learned evaluator networks with a fixed, seeded mapping: pooled
per-channel statistics (motion) and a hashed bag of words (text), each sent
through a fixed random projection to a common dimension and L2-normalized.
Metric VALUES under this extractor are not comparable to any published numbers;
reports stamp the extractor seed and version for that reason.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..data.motion import MotionSequence
from ..data.synth import normalize_caption
from ..errors import ValidationError

EXTRACTOR_VERSION = 1

_TEXT_BUCKETS = 512


@dataclass(frozen=True)
class GaussianStats:
    mean: np.ndarray    # (F,)
    cov: np.ndarray     # (F, F) symmetric PSD up to -1e-8 clamp

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=np.float64)
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise ValidationError("covariance must be symmetric")
        object.__setattr__(self, "cov", (cov + cov.T) / 2.0)

    @classmethod
    def from_features(cls, feats: np.ndarray) -> "GaussianStats":
        feats = np.asarray(feats, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] < 2:
            raise ValidationError("need a (N, F) feature matrix with N >= 2")
        if feats.shape[0] < feats.shape[1] + 1:
            import warnings

            warnings.warn(
                f"covariance from {feats.shape[0]} samples in {feats.shape[1]} dims is rank-deficient",
                stacklevel=2,
            )
        return cls(mean=feats.mean(axis=0), cov=np.cov(feats, rowvar=False))


class FeatureExtractor:
    def __init__(self, motion_dim: int, out_dim: int = 16, seed: int = 0):
        rng = np.random.default_rng(seed)
        stats_dim = 5 * motion_dim
        self.out_dim = out_dim
        self.seed = seed
        self.version = EXTRACTOR_VERSION
        self._motion_proj = rng.standard_normal((stats_dim, out_dim)) / np.sqrt(stats_dim)
        self._text_proj = rng.standard_normal((_TEXT_BUCKETS, out_dim)) / np.sqrt(_TEXT_BUCKETS)

    def motion_features(self, seqs: list[MotionSequence]) -> np.ndarray:
        rows = []
        for seq in seqs:
            f = seq.frames.astype(np.float64)
            delta = np.abs(np.diff(f, axis=0)).mean(axis=0) if f.shape[0] > 1 else np.zeros(f.shape[1])
            stats = np.concatenate([f.mean(axis=0), f.std(axis=0), f.min(axis=0), f.max(axis=0), delta])
            rows.append(stats)
        out = np.asarray(rows) @ self._motion_proj
        return _unit_rows(out)

    def text_features(self, texts: list[str]) -> np.ndarray:
        rows = np.zeros((len(texts), _TEXT_BUCKETS))
        for i, text in enumerate(texts):
            for word in normalize_caption(text):
                rows[i, _stable_bucket(word)] += 1.0
        out = rows @ self._text_proj
        return _unit_rows(out)


def _stable_bucket(word: str) -> int:
    digest = hashlib.sha1(word.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little") % _TEXT_BUCKETS


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.maximum(norms, 1e-12)
