"""Three-term codec loss and its gradients.

total = recon + alpha * joint + beta * commit, where

    recon  - mean L1 between input and reconstructed feature frames
    joint  - mean L1 between world joint positions of both (via forward kinematics)
    commit - mean squared L2 between encoder outputs and their (gradient-stopped) codes

Gradients reach the encoder through a straight-through estimator: the decoder-input
gradient is copied onto the encoder output across the quantizer. The codebook never
receives gradient; it is EMA-updated.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from ..data.motion import forward_kinematics_torch
from ..errors import DivergenceError
from .codebook import Codebook, quantize_latents
from .nets import CodecNets, FeatureScaler

DEFAULT_ALPHA = 0.5
DEFAULT_BETA = 0.02


@dataclass(frozen=True)
class VqLossReport:
    total: float
    recon: float
    joint: float
    commit: float
    alpha: float
    beta: float


def quantization_snapshot(
    nets: CodecNets, cb: Codebook, frames: torch.Tensor, scaler: FeatureScaler | None = None
) -> dict:
    """Freeze the quantizer's discrete selection at the current parameters.

    The straight-through estimator differentiates the surrogate objective in which
    the code assignment (and hence the constant offset ``zq - z``) is fixed; a
    finite-difference oracle must evaluate that same surrogate, so it perturbs
    parameters under this snapshot.
    """
    scaler = scaler or FeatureScaler.identity(frames.shape[-1])
    with torch.no_grad():
        z = nets.encode(scaler.normalize(frames))
        ids, zq_flat = quantize_latents(cb, z.reshape(-1, z.shape[-1]))
        zq = zq_flat.reshape(z.shape)
        return {"delta": (zq - z).detach(), "zq": zq.detach(), "ids": ids}


def vq_terms(
    nets: CodecNets,
    cb: Codebook,
    frames: torch.Tensor,
    joint_count: int,
    alpha: float = DEFAULT_ALPHA,
    beta: float = DEFAULT_BETA,
    frozen: dict | None = None,
    scaler: FeatureScaler | None = None,
) -> dict:
    """Forward pass returning loss tensors plus intermediates; frames is (B, T, D).

    Reconstruction and commitment are computed in the codec's scaled feature
    space; the joint term compares world joint positions of the raw-scale
    sequences so it stays a physical regularizer.
    """
    scaler = scaler or FeatureScaler.identity(frames.shape[-1])
    x = scaler.normalize(frames)
    z = nets.encode(x)
    b, tn, d = z.shape
    if frozen is None:
        flat = z.reshape(b * tn, d)
        ids, zq_flat = quantize_latents(cb, flat)
        zq = zq_flat.reshape(b, tn, d)
        z_st = z + (zq - z).detach()      # straight-through: decoder grad flows to encoder
    else:
        ids, zq = frozen["ids"], frozen["zq"]
        z_st = z + frozen["delta"]
    m_hat_scaled = nets.decode(z_st)

    recon = (x - m_hat_scaled).abs().mean()
    m_hat = scaler.denormalize(m_hat_scaled)
    p = forward_kinematics_torch(frames, joint_count)
    p_hat = forward_kinematics_torch(m_hat, joint_count)
    joint = (p - p_hat).abs().mean()
    commit = ((z - zq.detach()) ** 2).mean()
    total = recon + alpha * joint + beta * commit
    return {
        "total": total,
        "recon": recon,
        "joint": joint,
        "commit": commit,
        "z": z,
        "zq": zq,
        "ids": ids,
        "m_hat": m_hat,
    }


def vq_loss(
    nets: CodecNets,
    cb: Codebook,
    frames: torch.Tensor,
    joint_count: int,
    alpha: float = DEFAULT_ALPHA,
    beta: float = DEFAULT_BETA,
    frozen: dict | None = None,
    scaler: FeatureScaler | None = None,
) -> VqLossReport:
    terms = vq_terms(nets, cb, frames, joint_count, alpha, beta, frozen=frozen, scaler=scaler)
    report = VqLossReport(
        total=float(terms["total"].detach()),
        recon=float(terms["recon"].detach()),
        joint=float(terms["joint"].detach()),
        commit=float(terms["commit"].detach()),
        alpha=alpha,
        beta=beta,
    )
    if not all(map(torch.isfinite, (terms["total"], terms["recon"], terms["joint"], terms["commit"]))):
        raise DivergenceError(f"non-finite codec loss: {report}")
    return report


def backward(
    nets: CodecNets,
    cb: Codebook,
    frames: torch.Tensor,
    joint_count: int,
    alpha: float = DEFAULT_ALPHA,
    beta: float = DEFAULT_BETA,
    scaler: FeatureScaler | None = None,
) -> dict[str, torch.Tensor]:
    """Gradients of the total loss w.r.t. every encoder/decoder parameter."""
    terms = vq_terms(nets, cb, frames, joint_count, alpha, beta, scaler=scaler)
    names, params = zip(*nets.named_parameters())
    grads = torch.autograd.grad(terms["total"], params, allow_unused=True)
    out = {}
    for name, param, grad in zip(names, params, grads):
        g = grad if grad is not None else torch.zeros_like(param)
        if not torch.isfinite(g).all():
            raise DivergenceError(f"non-finite gradient for {name}")
        out[name] = g
    return out
