from .codebook import Codebook, codebook_reset, ema_update, init_codebook, quantize_latents, warm_start
from .losses import DEFAULT_ALPHA, DEFAULT_BETA, VqLossReport, backward, vq_loss, vq_terms
from .nets import CodecArch, CodecNets, MotionDecoder, MotionEncoder, build_nets
from .tokenizer import (
    MOTION_CLOSE,
    MOTION_OPEN,
    MotionCodec,
    MotionTokenSeq,
    concat_tokens,
    parse_token_text,
)
from .train import CodecTrainConfig, full_profile, pipeline_profile, train_vq

__all__ = [
    "Codebook",
    "CodecArch",
    "CodecNets",
    "CodecTrainConfig",
    "DEFAULT_ALPHA",
    "DEFAULT_BETA",
    "MOTION_CLOSE",
    "MOTION_OPEN",
    "MotionCodec",
    "MotionDecoder",
    "MotionEncoder",
    "MotionTokenSeq",
    "VqLossReport",
    "backward",
    "build_nets",
    "codebook_reset",
    "concat_tokens",
    "ema_update",
    "full_profile",
    "pipeline_profile",
    "init_codebook",
    "parse_token_text",
    "quantize_latents",
    "train_vq",
    "vq_loss",
    "vq_terms",
    "warm_start",
]
