"""Distribution and retrieval metrics for generated motion."""

from __future__ import annotations

import numpy as np

from ..errors import InsufficientSamplesError, NumericalError, ValidationError
from .features import GaussianStats

EIG_CLAMP = -1e-8
DEFAULT_DIVERSITY_PAIRS = 300


def mm_dist(text_feats: np.ndarray, motion_feats: np.ndarray) -> float:
    """Mean Euclidean distance between paired text and generated-motion features."""
    text_feats = np.asarray(text_feats, dtype=np.float64)
    motion_feats = np.asarray(motion_feats, dtype=np.float64)
    if text_feats.shape != motion_feats.shape:
        raise ValidationError("text and motion feature matrices must pair up")
    return float(np.linalg.norm(motion_feats - text_feats, axis=1).mean())


def _sqrt_psd(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((mat + mat.T) / 2.0)
    if w.min() < EIG_CLAMP:
        raise NumericalError(f"matrix is not PSD (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def fid(real: GaussianStats, gen: GaussianStats) -> float:
    """Fréchet distance between two Gaussian fits.

    ||mu_r - mu_g||^2 + Tr(S_r + S_g - 2 (S_r S_g)^{1/2}), with the trace of the
    cross square root computed by eigendecomposition of the symmetrized product
    S_r^{1/2} S_g S_r^{1/2}; all arithmetic stays real, tiny negative
    eigenvalues are clamped to zero.
    """
    diff = real.mean - gen.mean
    s1_half = _sqrt_psd(real.cov)
    inner = s1_half @ gen.cov @ s1_half
    w = np.linalg.eigh((inner + inner.T) / 2.0)[0]
    if w.min() < EIG_CLAMP:
        raise NumericalError(f"cross-covariance product has eigenvalue {w.min():.3e} below the clamp")
    tr_sqrt = float(np.sqrt(np.clip(w, 0.0, None)).sum())
    value = float(diff @ diff + np.trace(real.cov) + np.trace(gen.cov) - 2.0 * tr_sqrt)
    return max(value, 0.0)


def r_precision(
    motion_feats: np.ndarray,
    text_feats: np.ndarray,
    pool: int = 32,
    tops: tuple[int, ...] = (1, 2, 3),
    seed: int = 0,
) -> dict[int, float]:
    """Rank each motion's true text among ``pool - 1`` seeded decoys.

    Ties count for the decoy (conservative). Returns top-k accuracy per k.
    """
    motion_feats = np.asarray(motion_feats, dtype=np.float64)
    text_feats = np.asarray(text_feats, dtype=np.float64)
    n = motion_feats.shape[0]
    if text_feats.shape[0] != n:
        raise ValidationError("need one text per motion")
    if pool > n:
        raise InsufficientSamplesError(f"pool of {pool} exceeds the {n} available texts")
    rng = np.random.default_rng(seed)
    hits = {k: 0 for k in tops}
    for i in range(n):
        decoys = rng.choice(n - 1, size=pool - 1, replace=False)
        decoys = np.where(decoys >= i, decoys + 1, decoys)
        d_true = np.linalg.norm(motion_feats[i] - text_feats[i])
        d_decoys = np.linalg.norm(text_feats[decoys] - motion_feats[i], axis=1)
        rank = 1 + int((d_decoys <= d_true).sum())
        for k in tops:
            hits[k] += rank <= k
    return {k: hits[k] / n for k in tops}


def diversity(motion_feats: np.ndarray, s_dis: int = DEFAULT_DIVERSITY_PAIRS, seed: int = 0) -> float:
    """Mean distance over ``s_dis`` disjoint random pairs (sampled without replacement)."""
    motion_feats = np.asarray(motion_feats, dtype=np.float64)
    n = motion_feats.shape[0]
    if n < 2 * s_dis:
        raise InsufficientSamplesError(f"diversity with {s_dis} pairs needs {2 * s_dis} samples, got {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    a = motion_feats[perm[:s_dis]]
    b = motion_feats[perm[s_dis : 2 * s_dis]]
    return float(np.linalg.norm(a - b, axis=1).mean())
