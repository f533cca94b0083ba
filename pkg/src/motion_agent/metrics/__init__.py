from .features import EXTRACTOR_VERSION, FeatureExtractor, GaussianStats
from .generation import DEFAULT_DIVERSITY_PAIRS, diversity, fid, mm_dist, r_precision
from .report import INCOMPARABILITY_NOTE, evaluate_captioning, evaluate_generation
from .text import BertScorer, bleu, cider, rouge_l

__all__ = [
    "BertScorer",
    "DEFAULT_DIVERSITY_PAIRS",
    "EXTRACTOR_VERSION",
    "FeatureExtractor",
    "GaussianStats",
    "INCOMPARABILITY_NOTE",
    "bleu",
    "cider",
    "diversity",
    "evaluate_captioning",
    "evaluate_generation",
    "fid",
    "mm_dist",
    "r_precision",
    "rouge_l",
]
