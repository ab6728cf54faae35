"""Analytic backward pass and AdamW training loop for the toy model."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .. import _accel
from ..errors import InputError, TrainingError
from .config import ModelConfig
from .curriculum import Curriculum
from .model import ModelBundle, init_params

log = logging.getLogger(__name__)


def _ln_backward(dy, xhat, rstd, g):
    dg = (dy * xhat).reshape(-1, dy.shape[-1]).sum(0)
    db = dy.reshape(-1, dy.shape[-1]).sum(0)
    dxh = dy * g
    dx = rstd * (dxh - dxh.mean(-1, keepdims=True) - xhat * (dxh * xhat).mean(-1, keepdims=True))
    return dx, dg, db


def _mm_grad(a, d):
    """Weight gradient ``a^T d`` flattening all leading dims."""
    return a.reshape(-1, a.shape[-1]).T @ d.reshape(-1, d.shape[-1])


def loss_and_grads(params: dict, cfg: ModelConfig, x: np.ndarray, y: np.ndarray, mask: np.ndarray):
    """Mean masked next-token cross-entropy and its gradient for every parameter."""
    B, T = x.shape
    H, dh, d = cfg.n_heads, cfg.d_head, cfg.d_model
    scale = np.float32(1.0 / math.sqrt(dh))
    h = params["W_E"][x] + params["W_P"][:T][None]
    caches = []
    for l in range(cfg.n_layers):
        P = lambda n: params[f"blocks.{l}.{n}"]  # noqa: E731
        a, xh1, rs1 = _accel.layernorm(h, P("ln1_g"), P("ln1_b"))
        q = (a @ P("W_Q")).reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        k = (a @ P("W_K")).reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        v = (a @ P("W_V")).reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        probs = _accel.causal_softmax((q @ k.transpose(0, 1, 3, 2)) * scale)
        z = (probs @ v).transpose(0, 2, 1, 3).reshape(B, T, d)
        attn = z @ P("W_O") + P("b_O")
        hmid = h if cfg.parallel_blocks else h + attn
        m, xh2, rs2 = _accel.layernorm(hmid, P("ln2_g"), P("ln2_b"))
        pre = m @ P("W_in") + P("b_in")
        act = _accel.relu(pre)
        caches.append((a, xh1, rs1, q, k, v, probs, z, m, xh2, rs2, pre, act))
        h = hmid + act @ P("W_out") + P("b_out") + (attn if cfg.parallel_blocks else 0)
    xf, xhf, rsf = _accel.layernorm(h, params["lnf_g"], params["lnf_b"])
    logits = xf @ params["W_U"]
    logits -= logits.max(-1, keepdims=True)
    expl = np.exp(logits)
    sumexp = expl.sum(-1, keepdims=True)
    logp_y = np.take_along_axis(logits, y[..., None], -1)[..., 0] - np.log(sumexp[..., 0])
    denom = max(float(mask.sum()), 1.0)
    loss = float(-(logp_y * mask).sum() / denom)

    grads = {}
    dlogits = expl / sumexp
    np.put_along_axis(dlogits, y[..., None], np.take_along_axis(dlogits, y[..., None], -1) - 1.0, -1)
    dlogits *= (mask / denom)[..., None].astype(np.float32)
    grads["W_U"] = _mm_grad(xf, dlogits)
    dxf = dlogits @ params["W_U"].T
    dh_, grads["lnf_g"], grads["lnf_b"] = _ln_backward(dxf, xhf, rsf, params["lnf_g"])
    for l in reversed(range(cfg.n_layers)):
        P = lambda n: params[f"blocks.{l}.{n}"]  # noqa: E731
        a, xh1, rs1, q, k, v, probs, z, m, xh2, rs2, pre, act = caches[l]
        g = lambda n, val: grads.__setitem__(f"blocks.{l}.{n}", val)  # noqa: E731
        g("W_out", _mm_grad(act, dh_))
        g("b_out", dh_.reshape(-1, d).sum(0))
        dpre = (dh_ @ P("W_out").T) * _accel.relu_grad(pre)
        g("W_in", _mm_grad(m, dpre))
        g("b_in", dpre.reshape(-1, dpre.shape[-1]).sum(0))
        dm = dpre @ P("W_in").T
        dx2, dg2, db2 = _ln_backward(dm, xh2, rs2, P("ln2_g"))
        g("ln2_g", dg2)
        g("ln2_b", db2)
        # In a parallel block the MLP reads the block input, so the attention
        # output only receives the output gradient.
        dhmid = dh_ if cfg.parallel_blocks else dh_ + dx2
        g("W_O", _mm_grad(z, dhmid))
        g("b_O", dhmid.reshape(-1, d).sum(0))
        dz = (dhmid @ P("W_O").T).reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        dprobs = dz @ v.transpose(0, 1, 3, 2)
        dv = probs.transpose(0, 1, 3, 2) @ dz
        ds = _accel.softmax_backward(probs, dprobs) * scale
        dq = ds @ k
        dk = ds.transpose(0, 1, 3, 2) @ q
        dq, dk, dv = (t.transpose(0, 2, 1, 3).reshape(B, T, d) for t in (dq, dk, dv))
        g("W_Q", _mm_grad(a, dq))
        g("W_K", _mm_grad(a, dk))
        g("W_V", _mm_grad(a, dv))
        da = dq @ P("W_Q").T + dk @ P("W_K").T + dv @ P("W_V").T
        dx1, dg1, db1 = _ln_backward(da, xh1, rs1, P("ln1_g"))
        g("ln1_g", dg1)
        g("ln1_b", db1)
        dh_ = dhmid + dx1 + (dx2 if cfg.parallel_blocks else 0)
    dWE = np.zeros_like(params["W_E"])
    np.add.at(dWE, x.reshape(-1), dh_.reshape(-1, d))
    grads["W_E"] = dWE
    dWP = np.zeros_like(params["W_P"])
    dWP[:T] = dh_.sum(0)
    grads["W_P"] = dWP
    return loss, {k: v.astype(np.float32) for k, v in grads.items()}


@dataclass
class TrainConfig:
    steps: int = 1500
    lr: float = 3e-3
    batch_size: int = 24
    warmup: int = 100
    weight_decay: float = 0.01
    grad_clip: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.98
    log_every: int = 100


def _pad_batch(seqs: list, pad_id: int):
    T = max(len(s) for s in seqs) - 1
    x = np.full((len(seqs), T), pad_id, dtype=np.int64)
    y = np.full((len(seqs), T), pad_id, dtype=np.int64)
    mask = np.zeros((len(seqs), T), dtype=np.float32)
    for i, s in enumerate(seqs):
        n = len(s) - 1
        x[i, :n] = s[:-1]
        y[i, :n] = s[1:]
        mask[i, :n] = 1.0
    return x, y, mask


def train_toy(
    curriculum: Curriculum,
    config: ModelConfig,
    steps: int | None = None,
    lr: float | None = None,
    train_config: TrainConfig | None = None,
) -> ModelBundle:
    """Train a fresh model on ``curriculum``. Seeded by ``config.seed``.

    ``steps=0`` returns the initialization untouched.
    """
    tc = train_config or TrainConfig()
    steps = tc.steps if steps is None else steps
    lr = tc.lr if lr is None else lr
    if len(curriculum) == 0:
        raise InputError("curriculum is empty")
    if steps < 0:
        raise InputError("steps must be >= 0")
    tok = curriculum.tokenizer
    if config.vocab_size != len(tok):
        raise InputError(f"config.vocab_size={config.vocab_size} but tokenizer has {len(tok)} tokens")
    params = init_params(config)
    bundle = ModelBundle(config, params, tok, {"train": {"steps": steps, "lr": lr, "curriculum_seed": curriculum.seed}})
    if steps == 0:
        return bundle

    seqs = [np.array(tok.encode(d), dtype=np.int64) for d in curriculum.documents]
    too_long = [i for i, s in enumerate(seqs) if len(s) > config.max_seq_len + 1]
    if too_long:
        raise InputError(f"{len(too_long)} curriculum documents exceed max_seq_len (first: #{too_long[0]})")
    # Batches are drawn from one length bucket at a time to limit padding.
    buckets: dict = {}
    for i, s in enumerate(seqs):
        buckets.setdefault(len(s) // 16, []).append(i)
    bucket_keys = sorted(buckets)
    bucket_p = np.array([len(buckets[k]) for k in bucket_keys], dtype=np.float64)
    bucket_p /= bucket_p.sum()

    rng = np.random.default_rng(config.seed ^ 0x5EED)
    m1 = {k: np.zeros_like(v) for k, v in params.items()}
    m2 = {k: np.zeros_like(v) for k, v in params.items()}
    decay = {k for k in params if k.rsplit(".", 1)[-1].startswith("W")}
    t0 = time.perf_counter()
    ema = None
    for step in range(1, steps + 1):
        key = bucket_keys[int(rng.choice(len(bucket_keys), p=bucket_p))]
        pool = buckets[key]
        pick = rng.choice(len(pool), size=tc.batch_size, replace=len(pool) < tc.batch_size)
        x, y, mask = _pad_batch([seqs[pool[int(i)]] for i in pick], tok.pad_id)
        loss, grads = loss_and_grads(params, config, x, y, mask)
        if not math.isfinite(loss):
            raise TrainingError("non-finite loss", step)
        gnorm = math.sqrt(sum(float((g.astype(np.float64) ** 2).sum()) for g in grads.values()))
        if not math.isfinite(gnorm):
            raise TrainingError("non-finite gradient", step)
        clip = min(1.0, tc.grad_clip / (gnorm + 1e-12))
        if step <= tc.warmup:
            cur_lr = lr * step / tc.warmup
        else:
            frac = (step - tc.warmup) / max(1, steps - tc.warmup)
            cur_lr = lr * (0.1 + 0.9 * 0.5 * (1 + math.cos(math.pi * frac)))
        bc1 = 1 - tc.beta1 ** step
        bc2 = 1 - tc.beta2 ** step
        for k, p in params.items():
            g = grads[k] * np.float32(clip)
            m1[k] = tc.beta1 * m1[k] + (1 - tc.beta1) * g
            m2[k] = tc.beta2 * m2[k] + (1 - tc.beta2) * g * g
            upd = (m1[k] / bc1) / (np.sqrt(m2[k] / bc2) + 1e-8)
            if k in decay:
                upd = upd + tc.weight_decay * p
            params[k] = (p - cur_lr * upd).astype(np.float32)
        ema = loss if ema is None else 0.95 * ema + 0.05 * loss
        if tc.log_every and step % tc.log_every == 0:
            log.info("step %d loss %.4f (ema %.4f) lr %.2e %.1fs", step, loss, ema, cur_lr, time.perf_counter() - t0)
    bundle.metadata["train"]["final_loss_ema"] = ema
    return bundle
