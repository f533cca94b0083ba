"""Vocabulary extension, frozen-base guarantees, adapters, NLL oracle, gradients."""

import hashlib

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from motion_agent.errors import ContractViolationError, ValidationError, VocabularyError
from motion_agent.lm import (
    FinetuneConfig,
    LMConfig,
    PretrainConfig,
    Vocabulary,
    build_base_vocabulary,
    extend_vocabulary,
    finetune_adapters,
    pretrain_base,
    teacher_forced_nll,
)
from motion_agent.lm.model import BaseLM, MotionLM, init_base_weights
from motion_agent.lm.vocab import CONTROL


def small_base(seed=0, vocab_words=("alpha", "beta", "gamma", "delta"), cfg=None):
    vocab = Vocabulary(CONTROL + vocab_words)
    cfg = cfg or LMConfig(hidden=32, blocks=2, heads=2, ffn=64, max_len=64)
    model = BaseLM(cfg, vocab, init_base_weights(cfg, vocab.base_size, seed))
    model.freeze()
    return model


class TestVocabulary:
    def test_sizes_mirror_full_scale_arithmetic(self):
        base = Vocabulary(CONTROL + tuple(f"w{i}" for i in range(996)))   # B = 1000
        assert base.base_size == 1000
        ext = base.extend(512)
        assert ext.size == 1514          # B + K + 2; at B=256000 this is 256514

    def test_motion_block_contiguous(self):
        v = Vocabulary(CONTROL + ("a", "b")).extend(4)
        b = v.base_size
        assert [v.motion_token_id(i) for i in range(4)] == [b, b + 1, b + 2, b + 3]
        assert v.motion_open_id == b + 4 and v.motion_close_id == b + 5

    def test_unknown_words_map_to_unk(self):
        v = build_base_vocabulary(["a person walks"])
        assert v.encode_text("a person flies")[-1] == v.unk_id

    def test_motion_code_inverse(self):
        v = Vocabulary(CONTROL + ("x",)).extend(8)
        for i in range(8):
            assert v.motion_code(v.motion_token_id(i)) == i
        with pytest.raises(VocabularyError):
            v.motion_code(v.base_size - 1)


class TestExtension:
    def test_base_rows_bit_identical_after_extension(self):
        base = small_base()
        before = base.weights["tok_embed"].numpy().copy()
        h_before = base.weight_hash()
        model = extend_vocabulary(base, 16, seed=1)
        assert np.array_equal(model.base["tok_embed"].numpy(), before)
        assert model.base_hash() == h_before

    def test_same_seed_identical_new_rows(self):
        rows1 = extend_vocabulary(small_base(), 16, seed=9).motion_embed
        rows2 = extend_vocabulary(small_base(), 16, seed=9).motion_embed
        assert torch.equal(rows1, rows2)

    def test_new_row_scale_matches_base_std(self):
        base = small_base()
        model = extend_vocabulary(base, 64, seed=3)
        base_std = float(base.weights["tok_embed"].std())
        new_std = float(model.motion_embed.std())
        assert new_std == pytest.approx(base_std, rel=0.25)

    def test_artifact_roundtrip_preserves_ids(self, tmp_path):
        base = small_base()
        model = extend_vocabulary(base, 8, seed=1)
        model.save(tmp_path / "m.bin")
        loaded = MotionLM.load(tmp_path / "m.bin")
        assert loaded.vocab.base_tokens == model.vocab.base_tokens
        assert loaded.vocab.motion_token_id(3) == model.vocab.motion_token_id(3)
        assert loaded.base_hash() == model.base_hash()
        ids = torch.tensor([[1, 5, model.vocab.motion_open_id, model.vocab.motion_token_id(2)]])
        assert torch.allclose(loaded.logits(ids), model.logits(ids))


class TestAdapters:
    def test_zero_adapter_identity_on_100_inputs(self):
        """Criterion 6: A=0 reproduces base logits to machine precision."""
        model = extend_vocabulary(small_base(), 12, seed=2)
        adapters = model.new_adapters("generation", rank=4, alpha=4.0, dropout=0.0, seed=5)
        gen = torch.Generator().manual_seed(0)
        for _ in range(100):
            length = int(torch.randint(2, 16, (1,), generator=gen))
            ids = torch.randint(0, model.vocab.size, (1, length), generator=gen)
            plain = model.logits(ids)
            adapted = model.logits(ids, adapters)
            assert torch.equal(plain, adapted)

    def test_bm_zero_same_identity(self):
        model = extend_vocabulary(small_base(), 12, seed=2)
        adapters = model.new_adapters("generation", rank=4, alpha=4.0, dropout=0.0, seed=5)
        with torch.no_grad():
            for site in adapters.a:
                adapters.a[site].normal_(0, 0.3)
                adapters.b[site].zero_()
        ids = torch.randint(0, model.vocab.size, (3, 10), generator=torch.Generator().manual_seed(1))
        assert torch.equal(model.logits(ids), model.logits(ids, adapters))

    def test_nonzero_adapter_changes_logits(self):
        model = extend_vocabulary(small_base(), 12, seed=2)
        adapters = model.new_adapters("generation", rank=4, alpha=4.0, dropout=0.0, seed=5)
        with torch.no_grad():
            for site in adapters.a:
                adapters.a[site].normal_(0, 0.3)
        ids = torch.randint(0, model.vocab.size, (2, 8), generator=torch.Generator().manual_seed(2))
        assert not torch.equal(model.logits(ids), model.logits(ids, adapters))

    def test_adapter_artifact_roundtrip(self, tmp_path):
        model = extend_vocabulary(small_base(), 12, seed=2)
        adapters = model.new_adapters("captioning", rank=4, alpha=4.0, dropout=0.1, seed=5)
        with torch.no_grad():
            for site in adapters.a:
                adapters.a[site].normal_(0, 0.1)
        adapters.save(tmp_path / "a.bin", base_hash=model.base_hash())
        from motion_agent.lm.model import AdapterSet

        loaded = AdapterSet.load(tmp_path / "a.bin", expect_base_hash=model.base_hash())
        ids = torch.randint(0, model.vocab.size, (2, 8), generator=torch.Generator().manual_seed(3))
        assert torch.allclose(model.logits(ids, adapters), model.logits(ids, loaded))
        with pytest.raises(ValidationError):
            AdapterSet.load(tmp_path / "a.bin", expect_base_hash="0" * 64)

    def test_adapter_gradient_matches_finite_differences(self):
        """Criterion 1 (adapter side) on a 2-block float64 toy model."""
        cfg = LMConfig(hidden=16, blocks=2, heads=2, ffn=24, max_len=32)
        vocab = Vocabulary(CONTROL + ("u", "v", "w"))
        weights = init_base_weights(cfg, vocab.base_size, seed=0, dtype=torch.float64)
        base = BaseLM(cfg, vocab, weights)
        base.freeze()
        model = extend_vocabulary(base, 6, seed=1)
        adapters = model.new_adapters("generation", rank=3, alpha=3.0, dropout=0.0, seed=2)
        with torch.no_grad():
            for site in adapters.a:
                adapters.a[site].normal_(0, 0.05, generator=torch.Generator().manual_seed(7))

        ids = torch.randint(0, model.vocab.size, (2, 9), generator=torch.Generator().manual_seed(3))
        targets = torch.randint(0, model.vocab.size, (2, 9), generator=torch.Generator().manual_seed(4))

        def loss_value():
            logits = model.logits(ids, adapters)
            return F.cross_entropy(logits.reshape(-1, logits.shape[-1]), targets.reshape(-1))

        loss = loss_value()
        params = adapters.trainable_tensors()
        grads = torch.autograd.grad(loss, params)
        eps = 1e-5
        gen = torch.Generator().manual_seed(9)
        for _ in range(25):
            pi = int(torch.randint(len(params), (1,), generator=gen))
            flat = params[pi].detach().reshape(-1)
            wi = int(torch.randint(flat.numel(), (1,), generator=gen))
            with torch.no_grad():
                orig = float(flat[wi])
                flat[wi] = orig + eps
                up = float(loss_value())
                flat[wi] = orig - eps
                down = float(loss_value())
                flat[wi] = orig
            fd = (up - down) / (2 * eps)
            an = float(grads[pi].reshape(-1)[wi])
            # relative check with an absolute escape for near-zero gradients,
            # where central differences bottom out in truncation noise
            assert abs(fd - an) <= max(1e-4 * max(abs(fd), abs(an)), 1e-8)


class TestNllOracle:
    def test_training_nll_equals_log_softmax_oracle(self):
        """Five-token example vs an independent per-token log-softmax recomputation."""
        model = extend_vocabulary(small_base(), 6, seed=0)
        adapters = model.new_adapters("generation", rank=2, alpha=2.0, dropout=0.0, seed=1)
        vocab = model.vocab
        prompt = [vocab.bos_id, 4, 5]
        target = [vocab.motion_open_id, vocab.motion_token_id(1), vocab.motion_close_id]
        nll = teacher_forced_nll(model, adapters, [(prompt, target)])

        ids = torch.tensor([prompt + target])
        logits = model.logits(ids[:, :-1], adapters).detach().numpy()[0]
        total = 0.0
        for pos, tok in enumerate(prompt[1:] + target, start=0):
            if pos < len(prompt) - 1:
                continue                      # prompt positions are masked out
            row = logits[pos]
            log_probs = row - (np.log(np.sum(np.exp(row - row.max()))) + row.max())
            total += -log_probs[tok]
        assert nll == pytest.approx(total / len(target), abs=1e-6)


class TestFrozenBaseContracts:
    def test_finetune_preserves_base_hash(self, tmp_path):
        model = extend_vocabulary(small_base(), 6, seed=0)
        h0 = model.base_hash()
        examples = [([1, 4], [model.vocab.motion_open_id, model.vocab.motion_token_id(0), model.vocab.motion_close_id])]
        adapters, log = finetune_adapters(model, examples, "generation", FinetuneConfig(epochs=3, rank=2, alpha=2.0))
        assert model.base_hash() == h0 == log["base_hash"]

    def test_trainable_base_tensor_hard_fails(self):
        model = extend_vocabulary(small_base(), 6, seed=0)
        model.base["tok_embed"].requires_grad_(True)
        examples = [([1, 4], [model.vocab.motion_open_id, model.vocab.motion_close_id - 1])]
        with pytest.raises(ContractViolationError):
            finetune_adapters(model, examples, "generation", FinetuneConfig(epochs=1, rank=2, alpha=2.0))

    def test_nll_strictly_improves_from_initialization(self, tiny_corpus, tiny_codec):
        from motion_agent.lm import GENERIC_TEXT, build_examples

        texts = [a.text for it in tiny_corpus.subset("train") for a in it.annotations] + GENERIC_TEXT
        base, _ = pretrain_base(texts, PretrainConfig(model=LMConfig(hidden=32, blocks=2, heads=2, ffn=64, max_len=128), epochs=4))
        model = extend_vocabulary(base, tiny_codec.codebook_size, seed=0)
        examples = build_examples(tiny_corpus, tiny_codec, model.vocab, "generation", "train")
        adapters, log = finetune_adapters(model, examples, "generation", FinetuneConfig(epochs=8, rank=4, alpha=4.0))
        assert log["final_nll"] < log["init_nll"]


class TestPretraining:
    def test_val_perplexity_beats_unigram_oracle(self, tiny_corpus):
        texts = [a.text for it in tiny_corpus.subset("train") for a in it.annotations]
        cfg = PretrainConfig(model=LMConfig(hidden=32, blocks=2, heads=2, ffn=64, max_len=64), epochs=25, seed=0)
        base, log = pretrain_base(texts, cfg)

        # independent unigram oracle with add-one smoothing over the same split
        from collections import Counter

        from motion_agent.data import normalize_caption

        rng = np.random.default_rng(cfg.seed)
        order = rng.permutation(len(texts))
        n_val = max(1, int(cfg.val_fraction * len(texts)))
        val_texts = [texts[i] for i in order[:n_val]]
        train_texts = [texts[i] for i in order[n_val:]]
        counts = Counter()
        for t in train_texts:
            counts.update(normalize_caption(t) + ["<eos>"])
        total = sum(counts.values())
        v = base.vocab.base_size
        nll, n_tok = 0.0, 0
        for t in val_texts:
            for w in normalize_caption(t) + ["<eos>"]:
                nll += -np.log((counts[w] + 1) / (total + v))
                n_tok += 1
        unigram_ppl = float(np.exp(nll / n_tok))
        assert log["val_perplexity"] < unigram_ppl

    def test_deterministic_rerun_same_hash(self, tiny_corpus):
        texts = [a.text for it in tiny_corpus.subset("train") for a in it.annotations][:20]
        cfg = PretrainConfig(model=LMConfig(hidden=16, blocks=1, heads=2, ffn=32, max_len=64), epochs=3, seed=4)
        base1, log1 = pretrain_base(texts, cfg)
        base2, log2 = pretrain_base(texts, cfg)
        assert base1.weight_hash() == base2.weight_hash()
        assert log1["frozen_hash"] == log2["frozen_hash"]

    def test_frozen_stamp_in_artifact(self, tiny_corpus, tmp_path):
        texts = [a.text for it in tiny_corpus.subset("train") for a in it.annotations][:10]
        cfg = PretrainConfig(model=LMConfig(hidden=16, blocks=1, heads=2, ffn=32, max_len=64), epochs=2, seed=4)
        base, _ = pretrain_base(texts, cfg)
        base.save(tmp_path / "base.bin")
        from motion_agent.artifacts import read_artifact

        _, cfg_doc, _ = read_artifact(tmp_path / "base.bin", expect_kind="motion-lm-base")
        assert cfg_doc["frozen_hash"] == base.weight_hash()
        assert BaseLM.load(tmp_path / "base.bin").weight_hash() == base.weight_hash()
