"""Repeated-evaluation reports with 95% confidence intervals."""

from __future__ import annotations

import numpy as np

from ..codec.tokenizer import MotionCodec
from ..data.synth import PairedCorpus
from ..errors import InsufficientSamplesError
from ..lm.decode import GenerationConfig, generate_caption_batch, generate_motion_tokens_batch
from ..lm.model import AdapterSet, MotionLM
from .features import FeatureExtractor, GaussianStats
from .generation import DEFAULT_DIVERSITY_PAIRS, diversity, fid, mm_dist, r_precision
from .text import bleu, cider, rouge_l

INCOMPARABILITY_NOTE = (
    "Metrics computed under the package's fixed deterministic feature extractor; "
    "values are NOT comparable to evaluations that use learned extractor networks."
)


def _ci(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    return {
        "mean": float(arr.mean()),
        "ci95": float(1.96 * arr.std(ddof=0) / np.sqrt(len(arr))),
        "per_run": [float(v) for v in arr],
    }


def evaluate_generation(
    model: MotionLM,
    adapters: AdapterSet,
    codec: MotionCodec,
    corpus: PairedCorpus,
    repeats: int = 20,
    seed: int = 0,
    split: str = "test",
    extractor_seed: int = 0,
    feature_dim: int = 16,
    pool: int = 32,
    diversity_pairs: int = DEFAULT_DIVERSITY_PAIRS,
    generation: GenerationConfig | None = None,
) -> dict:
    """Generate the split ``repeats`` times under per-run seeds and report mean +/- CI."""
    items = corpus.subset(split)
    if len(items) < 2:
        raise InsufficientSamplesError(f"split {split!r} has {len(items)} items")
    captions = [it.annotations[0].text for it in items]
    extractor = FeatureExtractor(corpus.skeleton.feature_dim, out_dim=feature_dim, seed=extractor_seed)
    gt_feats = extractor.motion_features([it.seq for it in items])
    gt_stats = GaussianStats.from_features(gt_feats)
    text_feats = extractor.text_features(captions)
    base_cfg = generation or GenerationConfig(temperature=0.8, top_k=8)
    eff_pairs = min(diversity_pairs, len(items) // 2)

    runs: dict[str, list[float]] = {"fid": [], "mm_dist": [], "diversity": [], "top1": [], "top2": [], "top3": []}
    seeds = [seed + 1000 * r for r in range(repeats)]
    for run_seed in seeds:
        cfg = GenerationConfig(
            max_new_tokens=base_cfg.max_new_tokens,
            temperature=base_cfg.temperature,
            top_k=base_cfg.top_k,
            seed=run_seed,
        )
        tokens = generate_motion_tokens_batch(model, adapters, captions, cfg)
        motions = [codec.detokenize(t) for t in tokens]
        gen_feats = extractor.motion_features(motions)
        runs["fid"].append(fid(gt_stats, GaussianStats.from_features(gen_feats)))
        runs["mm_dist"].append(mm_dist(text_feats, gen_feats))
        runs["diversity"].append(diversity(gen_feats, s_dis=eff_pairs, seed=run_seed))
        tops = r_precision(gen_feats, text_feats, pool=pool, seed=run_seed)
        for k in (1, 2, 3):
            runs[f"top{k}"].append(tops[k])

    return {
        "note": INCOMPARABILITY_NOTE,
        "split": split,
        "repeats": repeats,
        "seeds": seeds,
        "extractor": {"seed": extractor_seed, "version": extractor.version, "dim": feature_dim},
        "r_precision_pool": pool,
        "diversity_pairs": {"requested": diversity_pairs, "effective": eff_pairs},
        "metrics": {name: _ci(values) for name, values in runs.items()},
    }


def evaluate_captioning(
    model: MotionLM,
    adapters: AdapterSet,
    codec: MotionCodec,
    corpus: PairedCorpus,
    seed: int = 0,
    split: str = "test",
    generation: GenerationConfig | None = None,
) -> dict:
    """Caption the split once (greedy by default) and score against all references.

    Also reports a shuffled-pair baseline: the same candidates scored against a
    seeded derangement of the reference lists.
    """
    items = corpus.subset(split)
    cfg = generation or GenerationConfig(max_new_tokens=24, temperature=0.0, seed=seed)
    tokens = [codec.tokenize(it.seq) for it in items]
    candidates = generate_caption_batch(model, adapters, tokens, cfg)
    references = [[a.text for a in it.annotations] for it in items]
    rng = np.random.default_rng(seed)
    shuffled = [references[j] for j in _derangement(len(items), rng)]
    scores = {
        "bleu1": bleu(candidates, references, n=1),
        "bleu4": bleu(candidates, references, n=4),
        "rouge_l": rouge_l(candidates, references),
        "cider": cider(candidates, references),
    }
    baseline = {
        "bleu1": bleu(candidates, shuffled, n=1),
        "bleu4": bleu(candidates, shuffled, n=4),
        "rouge_l": rouge_l(candidates, shuffled),
        "cider": cider(candidates, shuffled),
    }
    return {"split": split, "scores": scores, "shuffled_baseline": baseline, "candidates": candidates}


def _derangement(n: int, rng: np.random.Generator) -> np.ndarray:
    """Permutation with no fixed points, so every pair is mismatched."""
    while True:
        p = rng.permutation(n)
        if not np.any(p == np.arange(n)):
            return p
