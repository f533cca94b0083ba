from .decode import (
    GenerationConfig,
    generate_caption,
    generate_caption_batch,
    generate_motion_tokens,
    generate_motion_tokens_batch,
)
from .model import AdapterSet, BaseLM, LMConfig, MotionLM, extend_vocabulary, init_base_weights, lm_forward
from .prompts import CAPTIONING_PROMPT, GENERATION_PROMPT, PromptTemplate
from .train import (
    FinetuneConfig,
    GENERIC_TEXT,
    PretrainConfig,
    build_examples,
    finetune_adapters,
    full_finetune_profile,
    pretrain_base,
    teacher_forced_nll,
)
from .vocab import Vocabulary, build_base_vocabulary

__all__ = [
    "AdapterSet",
    "BaseLM",
    "CAPTIONING_PROMPT",
    "FinetuneConfig",
    "GENERATION_PROMPT",
    "GENERIC_TEXT",
    "GenerationConfig",
    "LMConfig",
    "MotionLM",
    "PretrainConfig",
    "PromptTemplate",
    "Vocabulary",
    "build_base_vocabulary",
    "build_examples",
    "extend_vocabulary",
    "finetune_adapters",
    "full_finetune_profile",
    "generate_caption",
    "generate_caption_batch",
    "generate_motion_tokens",
    "generate_motion_tokens_batch",
    "init_base_weights",
    "lm_forward",
    "pretrain_base",
    "teacher_forced_nll",
]
