"""Loss identity, brute-force recomputation, and finite-difference gradient checks.

The finite-difference oracle evaluates the straight-through surrogate: the
quantizer's discrete selection is frozen at the evaluation point (that is the
function whose gradient the estimator computes); decoder-side parameters also
match finite differences of the unfrozen loss, since assignments do not depend
on them.
"""

import numpy as np
import pytest
import torch

from motion_agent.codec import backward, init_codebook, vq_loss, vq_terms
from motion_agent.codec.losses import quantization_snapshot
from motion_agent.codec.nets import CodecArch, FeatureScaler, build_nets
from motion_agent.data.motion import forward_kinematics_torch
from motion_agent.errors import DivergenceError, LengthError


def toy_instance(seed, t=8, joints=2, width=6, latent=4, k=4, batch=2):
    d = 4 + 3 * (joints - 1)
    arch = CodecArch(feature_dim=d, width=width, latent_dim=latent, strides=(2, 2))
    nets = build_nets(arch, seed=seed, dtype=torch.float64)
    cb = init_codebook(k, latent, seed=seed + 1, dtype=torch.float64)
    gen = torch.Generator().manual_seed(seed + 2)
    frames = torch.randn(batch, t, d, generator=gen, dtype=torch.float64) * 0.3
    frames[:, :, 3] = frames[:, :, 3].abs() + 0.5
    return nets, cb, frames, joints


class TestLossIdentity:
    def test_total_is_weighted_sum(self):
        nets, cb, frames, joints = toy_instance(0)
        for alpha, beta in [(0.5, 0.02), (1.2, 0.3), (0.0, 1.0)]:
            rep = vq_loss(nets, cb, frames, joints, alpha, beta)
            expected = rep.recon + alpha * rep.joint + beta * rep.commit
            assert rep.total == pytest.approx(expected, rel=1e-6)

    def test_default_weights(self):
        nets, cb, frames, joints = toy_instance(1)
        rep = vq_loss(nets, cb, frames, joints)
        assert rep.alpha == 0.5 and rep.beta == 0.02

    def test_all_zero_case(self):
        nets, cb, frames, joints = toy_instance(2)
        with torch.no_grad():
            for p in nets.parameters():
                p.zero_()
        cb_zero = init_codebook(4, 4, seed=0, dtype=torch.float64)
        with torch.no_grad():
            cb_zero.codes.zero_()
        zero_frames = torch.zeros_like(frames)
        rep = vq_loss(nets, cb_zero, zero_frames, joints)
        assert rep.recon == 0.0 and rep.joint == 0.0 and rep.commit == 0.0 and rep.total == 0.0

    def test_hand_sized_brute_force_oracle(self):
        """Scalar-by-scalar recomputation of every term on a T=4 instance."""
        nets, cb, frames, joints = toy_instance(3, t=4, k=2, latent=2)
        scaler = FeatureScaler(
            mean=torch.full((frames.shape[-1],), 0.1, dtype=torch.float64),
            std=torch.full((frames.shape[-1],), 2.0, dtype=torch.float64),
        )
        alpha, beta = 0.7, 0.11
        rep = vq_loss(nets, cb, frames, joints, alpha, beta, scaler=scaler)

        with torch.no_grad():
            x = (frames - 0.1) / 2.0
            z = nets.encode(x)
            flat = z.reshape(-1, 2).numpy()
            codes = cb.codes.numpy()
            ids = []
            for row in flat:
                dists = [float(((row - c) ** 2).sum()) for c in codes]
                ids.append(int(np.argmin(dists)))
            zq = np.array([codes[i] for i in ids])
            commit = float(np.mean((flat - zq) ** 2))
            m_hat_scaled = nets.decode(torch.tensor(zq.reshape(z.shape), dtype=torch.float64))
            recon = float(np.mean(np.abs((x - m_hat_scaled).numpy())))
            m_hat = m_hat_scaled * 2.0 + 0.1
            p = forward_kinematics_torch(frames, joints).numpy()
            p_hat = forward_kinematics_torch(m_hat, joints).numpy()
            joint = float(np.mean(np.abs(p - p_hat)))
        assert rep.recon == pytest.approx(recon, rel=1e-10)
        assert rep.joint == pytest.approx(joint, rel=1e-10)
        assert rep.commit == pytest.approx(commit, rel=1e-10)
        assert rep.total == pytest.approx(recon + alpha * joint + beta * commit, rel=1e-10)

    def test_non_finite_raises_divergence(self):
        nets, cb, frames, joints = toy_instance(4)
        with torch.no_grad():
            next(nets.parameters()).fill_(float("nan"))
        with pytest.raises(DivergenceError):
            vq_loss(nets, cb, frames, joints)


class TestGradients:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_finite_difference_match(self, seed):
        """Criterion 1 (codec side): analytic vs central differences, rel <= 1e-4."""
        nets, cb, frames, joints = toy_instance(10 + seed)
        grads = backward(nets, cb, frames, joints)
        snap = quantization_snapshot(nets, cb, frames)
        eps = 1e-5
        gen = torch.Generator().manual_seed(seed)
        named = list(nets.named_parameters())
        for _ in range(30):
            ni = int(torch.randint(len(named), (1,), generator=gen))
            name, par = named[ni]
            flat = par.detach().reshape(-1)
            wi = int(torch.randint(flat.numel(), (1,), generator=gen))
            with torch.no_grad():
                orig = float(flat[wi])
                flat[wi] = orig + eps
                up = vq_loss(nets, cb, frames, joints, frozen=snap).total
                flat[wi] = orig - eps
                down = vq_loss(nets, cb, frames, joints, frozen=snap).total
                flat[wi] = orig
            fd = (up - down) / (2 * eps)
            an = float(grads[name].reshape(-1)[wi])
            tol = max(1e-4 * max(abs(fd), abs(an)), 1e-8)
            assert abs(fd - an) <= tol, f"{name}[{wi}]: fd={fd} analytic={an}"

    def test_decoder_grads_match_unfrozen_loss(self):
        """Assignments do not depend on decoder weights, so plain FD works there."""
        nets, cb, frames, joints = toy_instance(20)
        grads = backward(nets, cb, frames, joints)
        eps = 1e-5
        gen = torch.Generator().manual_seed(0)
        named = [(n, p) for n, p in nets.named_parameters() if n.startswith("decoder")]
        for _ in range(10):
            ni = int(torch.randint(len(named), (1,), generator=gen))
            name, par = named[ni]
            flat = par.detach().reshape(-1)
            wi = int(torch.randint(flat.numel(), (1,), generator=gen))
            with torch.no_grad():
                orig = float(flat[wi])
                flat[wi] = orig + eps
                up = vq_loss(nets, cb, frames, joints).total
                flat[wi] = orig - eps
                down = vq_loss(nets, cb, frames, joints).total
                flat[wi] = orig
            fd = (up - down) / (2 * eps)
            an = float(grads[name].reshape(-1)[wi])
            assert abs(fd - an) <= max(1e-4 * max(abs(fd), abs(an)), 1e-8)

    def test_zero_learning_signal_at_fixed_point(self):
        """m_hat == m and z == zq leaves (numerically) no gradient anywhere."""
        nets, cb, frames, joints = toy_instance(30)
        with torch.no_grad():
            for p in nets.parameters():
                p.zero_()
        cbz = init_codebook(4, 4, seed=0, dtype=torch.float64)
        with torch.no_grad():
            cbz.codes.zero_()
        zero_frames = torch.zeros_like(frames)
        grads = backward(nets, cbz, zero_frames, joints)
        # L1 terms sit exactly at their nondifferentiable zero; autograd's
        # subgradient there is 0, so every parameter gradient vanishes
        total = sum(float(g.abs().sum()) for g in grads.values())
        assert total == 0.0

    def test_commit_gradient_closed_form(self):
        """d(beta*commit)/dz = 2*beta*(z - zq)/numel, checked at the latent level."""
        nets, cb, frames, joints = toy_instance(40)
        beta = 0.02
        x = frames
        z = nets.encode(x)
        z_leaf = z.detach().requires_grad_(True)
        from motion_agent.codec import quantize_latents

        ids, zq = quantize_latents(cb, z_leaf.detach().reshape(-1, z.shape[-1]))
        zq = zq.reshape(z.shape)
        commit = beta * ((z_leaf - zq.detach()) ** 2).mean()
        (grad,) = torch.autograd.grad(commit, z_leaf)
        expected = 2 * beta * (z_leaf.detach() - zq) / z_leaf.numel()
        assert torch.allclose(grad, expected, atol=1e-12)

    def test_length_contract(self):
        nets, cb, frames, joints = toy_instance(50, t=8)
        with pytest.raises(LengthError):
            nets.encode(frames[:, :7])


class TestStraightThrough:
    def test_encoder_receives_decoder_gradient(self):
        nets, cb, frames, joints = toy_instance(60)
        grads = backward(nets, cb, frames, joints)
        enc_norm = sum(float(g.abs().sum()) for n, g in grads.items() if n.startswith("encoder"))
        assert enc_norm > 0.0

    def test_codebook_receives_no_gradient(self):
        nets, cb, frames, joints = toy_instance(61)
        terms = vq_terms(nets, cb, frames, joints)
        assert not cb.codes.requires_grad
        assert terms["total"].requires_grad
        terms["total"].backward()
        assert cb.codes.grad is None
