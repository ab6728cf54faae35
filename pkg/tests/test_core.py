from __future__ import annotations

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svlab.core.config import ModelConfig
from svlab.core.curriculum import build_curriculum
from svlab.core.hooks import HeadSubstitute, HookSet, residual_add
from svlab.core.io import MAGIC, load_model, model_from_bytes, model_to_bytes, save_model
from svlab.core.model import forward, generate, generate_batch, init_params, project_head
from svlab.core.tokenizer import Tokenizer
from svlab.core.train import TrainConfig, _pad_batch, loss_and_grads, train_toy
from svlab.errors import ConfigurationError, FormatError, InputError, TrainingError, VersionError

from conftest import make_model

PROBE = "Q: big\nA: small\n\nQ: hot\nA:"


# --------------------------------------------------------------------------- config


def test_config_invariants():
    with pytest.raises(ConfigurationError):
        ModelConfig(n_heads=8, d_head=8, d_model=128, vocab_size=10)
    with pytest.raises(ConfigurationError):
        ModelConfig(vocab_size=10, max_seq_len=32)
    with pytest.raises(ConfigurationError):
        ModelConfig(vocab_size=0)
    with pytest.raises(ConfigurationError):
        ModelConfig(vocab_size=10, seed=2**64)


def test_config_roundtrip():
    cfg = ModelConfig(vocab_size=99, seed=2**64 - 1)
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigurationError):
        ModelConfig.from_dict({**cfg.to_dict(), "bogus": 1})


# --------------------------------------------------------------------------- tokenizer


def test_tokenizer_specials_stable(tokenizer):
    assert tokenizer.encode("Q:") == [tokenizer.q_id]
    assert tokenizer.encode("A:") == [tokenizer.a_id]
    assert tokenizer.encode("\n") == [tokenizer.newline_id]
    assert tokenizer.vocabulary[:6] == ["<pad>", "<unk>", "<eos>", "\n", "Q:", "A:"]


def test_tokenizer_case_is_part_of_token(tokenizer):
    ids = tokenizer.encode("Paris")
    assert len(ids) == 1 and tokenizer.tokens(ids) == ["Paris"]
    assert tokenizer.encode("Big") != tokenizer.encode("big")
    assert tokenizer.decode(ids) == "Paris"
    assert tokenizer.decode(tokenizer.encode(PROBE)) == PROBE


def test_tokenizer_unknown(tokenizer):
    assert tokenizer.encode("zzqx") == [tokenizer.unk_id]


def test_tokenizer_rejects_bad_vocab():
    with pytest.raises(ConfigurationError):
        Tokenizer(["a", "b"])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=10_000), min_size=0, max_size=40))
def test_encode_decode_identity(tokenizer, raw):
    ids = [r % len(tokenizer) for r in raw]
    ids = [i for i in ids if i != tokenizer.pad_id]
    assert tokenizer.encode(tokenizer.decode(ids)) == ids


# --------------------------------------------------------------------------- forward / hooks


def test_forward_determinism_and_neutral_hooks(tiny_model, tokenizer):
    ids = tokenizer.encode(PROBE)
    a, _ = forward(tiny_model, ids)
    b, _ = forward(tiny_model, ids, HookSet())
    c, trace = forward(tiny_model, ids, HookSet(capture_residual=True, capture_heads=True))
    assert np.array_equal(a, b) and np.array_equal(a, c)
    cfg = tiny_model.config
    assert trace.residual.shape == (cfg.n_layers, len(ids), cfg.d_model)
    assert trace.head_out.shape == (cfg.n_layers, cfg.n_heads, len(ids), cfg.d_head)
    assert trace.logits.shape == (len(ids), cfg.vocab_size)


def test_forward_errors(tiny_model):
    with pytest.raises(InputError):
        forward(tiny_model, [])
    with pytest.raises(InputError):
        forward(tiny_model, [7] * 129)
    bad = HookSet(head_substitute=(HeadSubstitute(5, 0, -1, np.zeros(8)),))
    with pytest.raises(ConfigurationError):
        forward(tiny_model, [7, 8], bad)
    bad = HookSet(residual_add=(residual_add([9], np.zeros(16)),))
    with pytest.raises(ConfigurationError):
        forward(tiny_model, [7, 8], bad)


def test_identity_head_substitution(tiny_model, tokenizer):
    ids = tokenizer.encode(PROBE)
    base, trace = forward(tiny_model, ids, HookSet(capture_heads=True))
    cfg = tiny_model.config
    for l in range(cfg.n_layers):
        for h in range(cfg.n_heads):
            for pos in (-1, 3):
                hs = HeadSubstitute(l, h, pos, trace.head_out[l, h, pos])
                out, _ = forward(tiny_model, ids, HookSet(head_substitute=(hs,)))
                assert np.max(np.abs(out - base)) <= 1e-6


def test_head_substitution_changes_output(tiny_model, tokenizer):
    ids = tokenizer.encode(PROBE)
    base, _ = forward(tiny_model, ids)
    hs = HeadSubstitute(0, 1, -1, np.full(8, 3.0, dtype=np.float32))
    out, _ = forward(tiny_model, ids, HookSet(head_substitute=(hs,)))
    assert np.abs(out[-1] - base[-1]).max() > 1e-3
    assert np.array_equal(out[:-1], base[:-1])  # causal: earlier positions untouched


def test_zero_strength_and_linearity(tiny_model, tokenizer):
    ids = tokenizer.encode(PROBE)
    base, _ = forward(tiny_model, ids)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(16).astype(np.float32)
    zero, _ = forward(tiny_model, ids, HookSet(residual_add=(residual_add([0, 1], v, 0.0),)))
    assert np.array_equal(zero, base)
    pm = HookSet(residual_add=(residual_add([1], v, 1.0), residual_add([1], -v, 1.0)))
    out, _ = forward(tiny_model, ids, pm)
    assert np.max(np.abs(out - base)) <= 1e-5


def test_renormalize_preserves_norm(tiny_model, tokenizer):
    ids = tokenizer.encode(PROBE)
    v = np.ones(16, dtype=np.float32) / 4
    hooks = HookSet(residual_add=(residual_add([0, 1], v, 0.7, scale_by_norm=True, renormalize=True),),
                    capture_residual=True)
    _, trace = forward(tiny_model, ids, hooks)
    pre = np.linalg.norm(trace.residual_pre, axis=-1)
    post = np.linalg.norm(trace.residual, axis=-1)
    assert np.allclose(pre, post, rtol=1e-5, atol=1e-6)
    assert not np.allclose(trace.residual, trace.residual_pre)


def test_hooks_do_not_mutate_weights(tiny_model, tokenizer):
    before = {k: v.copy() for k, v in tiny_model.params.items()}
    ids = tokenizer.encode(PROBE)
    hooks = HookSet(residual_add=(residual_add([0], np.ones(16), 2.0),),
                    head_substitute=(HeadSubstitute(1, 0, -1, np.ones(8)),))
    forward(tiny_model, ids, hooks)
    generate(tiny_model, ids, 3, hooks)
    assert all(np.array_equal(before[k], tiny_model.params[k]) for k in before)


def test_project_head_matches_wo_slice(tiny_model):
    z = np.arange(8, dtype=np.float32)
    w = tiny_model.layer(1, "W_O")[8:16]
    assert np.allclose(project_head(tiny_model, 1, 1, z), z @ w)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.sampled_from([4, 8]), st.integers(1, 20), st.integers(0, 2**32))
def test_trace_shapes_random_configs(L, H, dh, T, seed):
    m = make_model(n_layers=L, n_heads=H, d_head=dh, seed=seed % 1000)
    ids = np.random.default_rng(seed).integers(7, len(m.tokenizer), T)
    logits, trace = forward(m, ids, HookSet(capture_residual=True, capture_heads=True))
    assert logits.shape == (T, len(m.tokenizer))
    assert trace.residual.shape == (L, T, H * dh)
    assert trace.head_out.shape == (L, H, T, dh)
    again, _ = forward(m, ids)
    assert np.array_equal(logits, again)


# --------------------------------------------------------------------------- generation


@pytest.mark.parametrize("parallel", [True, False])
def test_generate_lengths_and_kv_equivalence(parallel, tokenizer):
    tiny_model = make_model(scale=20.0, parallel=parallel)
    ids = tokenizer.encode(PROBE)
    out1 = generate(tiny_model, ids, 1)
    assert len(out1) == len(ids) + 1
    out = generate(tiny_model, ids, 6)
    # Greedy decoding with a cache must match recomputing from scratch.
    seq = list(ids)
    for _ in range(6):
        logits, _ = forward(tiny_model, seq)
        seq.append(int(logits[-1].argmax()))
    assert out == seq


def test_generate_hooks_cover_generated_tokens(tiny_model, tokenizer):
    ids = tokenizer.encode(PROBE)
    v = np.random.default_rng(1).standard_normal(16).astype(np.float32) * 5
    hooks = HookSet(residual_add=(residual_add([0, 1], v, 1.0, "all"),))
    out = generate(tiny_model, ids, 5, hooks)
    seq = list(ids)
    for _ in range(5):
        logits, _ = forward(tiny_model, seq, hooks)
        seq.append(int(logits[-1].argmax()))
    assert out == seq


def test_generate_zero_strength_identical(tiny_model, tokenizer):
    ids = tokenizer.encode(PROBE)
    hooks = HookSet(residual_add=(residual_add([0, 1], np.ones(16), 0.0),))
    assert generate(tiny_model, ids, 8, hooks) == generate(tiny_model, ids, 8)


def test_generate_errors_and_stop(tiny_model, tokenizer):
    with pytest.raises(InputError):
        generate(tiny_model, [7], 0)
    with pytest.raises(InputError):
        generate(tiny_model, [7] * 129, 1)
    ids = tokenizer.encode(PROBE)
    free = generate_batch(tiny_model, [ids], 8)[0]
    stopped = generate_batch(tiny_model, [ids], 8, stop_token=free[2])[0]
    assert stopped == free[: free.index(free[2])]
    # near the context limit the continuation is truncated, not an error
    near = generate_batch(tiny_model, [[7] * 127], 10)[0]
    assert len(near) == 2


def test_generate_batch_matches_single(tiny_model, tokenizer):
    a = tokenizer.encode("Q: hot\nA:")
    b = tokenizer.encode("Q: big\nA:")
    batch = generate_batch(tiny_model, [a, b], 5)
    assert batch[0] == generate_batch(tiny_model, [a], 5)[0]
    assert batch[1] == generate_batch(tiny_model, [b], 5)[0]


# --------------------------------------------------------------------------- io


def test_save_load_roundtrip(tmp_path, tiny_model, tokenizer):
    path = tmp_path / "m.svlm"
    save_model(tiny_model, path)
    loaded = load_model(path)
    assert loaded.config == tiny_model.config
    assert loaded.tokenizer.vocabulary == tiny_model.tokenizer.vocabulary
    ids = tokenizer.encode(PROBE)
    assert np.array_equal(forward(loaded, ids)[0], forward(tiny_model, ids)[0])
    assert path.read_bytes()[:4] == MAGIC


def test_corrupt_files(tiny_model):
    data = bytearray(model_to_bytes(tiny_model))
    bad = bytearray(data)
    bad[1] ^= 0xFF
    with pytest.raises(FormatError, match="offset 0"):
        model_from_bytes(bytes(bad))
    newer = bytearray(data)
    newer[4:8] = (99).to_bytes(4, "little")
    with pytest.raises(VersionError) as exc:
        model_from_bytes(bytes(newer))
    assert "99" in str(exc.value) and "1" in str(exc.value)
    with pytest.raises(FormatError, match="truncated"):
        model_from_bytes(bytes(data[: len(data) // 2]))
    flipped = bytearray(data)
    flipped[-10] ^= 0x01
    with pytest.raises(FormatError, match="checksum"):
        model_from_bytes(bytes(flipped))
    with pytest.raises(FormatError, match="trailing"):
        model_from_bytes(bytes(data) + b"\x00")


# --------------------------------------------------------------------------- training


@pytest.mark.parametrize("parallel", [True, False])
def test_gradients_match_finite_differences(parallel):
    m = make_model(n_layers=2, n_heads=2, d_head=4, seed=3, d_mlp=16, parallel=parallel)
    p64 = {k: v.astype(np.float64) for k, v in m.params.items()}
    rng = np.random.default_rng(0)
    seqs = [rng.integers(7, 60, 9), rng.integers(7, 60, 6)]
    x, y, mask = _pad_batch(seqs, 0)
    _, grads = loss_and_grads(p64, m.config, x, y, mask)
    for name in ("blocks.0.W_Q", "blocks.1.W_in", "blocks.0.ln1_g", "W_E", "W_P", "W_U", "blocks.1.b_O"):
        flat = p64[name].reshape(-1)
        for idx in rng.choice(flat.size, 4, replace=False):
            old = flat[idx]
            flat[idx] = old + 1e-6
            lp, _ = loss_and_grads(p64, m.config, x, y, mask)
            flat[idx] = old - 1e-6
            lm, _ = loss_and_grads(p64, m.config, x, y, mask)
            flat[idx] = old
            num = (lp - lm) / 2e-6
            ana = grads[name].reshape(-1)[idx]
            assert abs(num - ana) <= 1e-4 * max(1.0, abs(num)), (name, idx, num, ana)


def _small_train_setup():
    cur = build_curriculum(n_docs=60, seed=0)
    cfg = ModelConfig(n_layers=1, n_heads=2, d_model=16, d_head=8, vocab_size=len(cur.tokenizer), seed=4, d_mlp=16)
    return cur, cfg


def test_train_zero_steps_is_init():
    cur, cfg = _small_train_setup()
    m = train_toy(cur, cfg, steps=0)
    init = init_params(cfg)
    assert all(np.array_equal(m.params[k], init[k]) for k in init)


def test_train_deterministic_bytes():
    cur, cfg = _small_train_setup()
    tc = TrainConfig(batch_size=4, warmup=2, log_every=0)
    a = model_to_bytes(train_toy(cur, cfg, steps=5, train_config=tc))
    b = model_to_bytes(train_toy(cur, cfg, steps=5, train_config=tc))
    assert a == b


def test_train_divergence_error():
    cur, cfg = _small_train_setup()
    with pytest.raises(TrainingError) as exc:
        train_toy(cur, cfg, steps=3, lr=float("nan"), train_config=TrainConfig(batch_size=2, warmup=1, log_every=0))
    assert exc.value.step >= 1


def test_train_rejects_empty_and_mismatch():
    cur, cfg = _small_train_setup()
    with pytest.raises(InputError):
        train_toy(dataclasses.replace(cur, documents=[], kinds=[]), cfg, steps=1)
    with pytest.raises(InputError):
        train_toy(cur, ModelConfig(n_layers=1, n_heads=2, d_model=16, d_head=8, vocab_size=5), steps=1)


def test_curriculum_deterministic(tmp_path):
    a = build_curriculum(n_docs=20, seed=3)
    b = build_curriculum(n_docs=20, seed=3)
    assert a.documents == b.documents
    a.to_jsonl(tmp_path / "c.jsonl")
    from svlab.core.curriculum import Curriculum
    c = Curriculum.from_jsonl(tmp_path / "c.jsonl")
    assert c.documents == a.documents


def test_curriculum_fractions():
    cur = build_curriculum(n_docs=400, seed=1, shuffled_fraction=0.5)
    share = cur.kinds.count("shuffled") / sum(k not in ("detox", "sentiment", "echo_sentence") for k in cur.kinds)
    assert 0.4 < share < 0.6
    with pytest.raises(ConfigurationError):
        build_curriculum(n_docs=1, shuffled_fraction=1.0)
    cur = build_curriculum(n_docs=600, seed=2, sentence_fraction=0.5, sentence_echo_fraction=0.6)
    sentence = [k for k in cur.kinds if k in ("detox", "sentiment", "echo_sentence")]
    assert 0.5 < sentence.count("echo_sentence") / len(sentence) < 0.7
    with pytest.raises(ConfigurationError):
        build_curriculum(n_docs=1, sentence_echo_fraction=-0.1)
