"""Pre-LayerNorm decoder-only transformer in numpy with hookable internals.

Blocks are parallel by default, as in GPT-J: attention and MLP both read the
block input, ``x + attn(ln1(x)) + mlp(ln2(x))``. With
``parallel_blocks=False`` the MLP reads ``x + attn`` instead (GPT-2 layout).

Parameter layout (also the serialization order, see :mod:`svlab.core.io`)::

    W_E [V, d]   W_P [T, d]
    per layer l: ln1_g, ln1_b [d]; W_Q, W_K, W_V [d, d]; W_O [d, d]; b_O [d];
                 ln2_g, ln2_b [d]; W_in [d, m]; b_in [m]; W_out [m, d]; b_out [d]
    lnf_g, lnf_b [d]   W_U [d, V]

Head ``h`` owns columns ``h*d_head:(h+1)*d_head`` of ``W_Q/W_K/W_V`` and the
matching rows of ``W_O``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import _accel
from ..errors import InputError
from .config import ModelConfig
from .hooks import EMPTY, ActivationTrace, HookSet
from .tokenizer import Tokenizer

LAYER_PARAMS = (
    "ln1_g", "ln1_b", "W_Q", "W_K", "W_V", "W_O", "b_O",
    "ln2_g", "ln2_b", "W_in", "b_in", "W_out", "b_out",
)


def param_names(cfg: ModelConfig) -> list[str]:
    names = ["W_E", "W_P"]
    for l in range(cfg.n_layers):
        names += [f"blocks.{l}.{p}" for p in LAYER_PARAMS]
    return names + ["lnf_g", "lnf_b", "W_U"]


def param_shapes(cfg: ModelConfig) -> dict[str, tuple]:
    d, m, V, T = cfg.d_model, cfg.d_mlp, cfg.vocab_size, cfg.max_seq_len
    per = {
        "ln1_g": (d,), "ln1_b": (d,), "W_Q": (d, d), "W_K": (d, d), "W_V": (d, d),
        "W_O": (d, d), "b_O": (d,), "ln2_g": (d,), "ln2_b": (d,),
        "W_in": (d, m), "b_in": (m,), "W_out": (m, d), "b_out": (d,),
    }
    shapes = {"W_E": (V, d), "W_P": (T, d)}
    for l in range(cfg.n_layers):
        shapes.update({f"blocks.{l}.{k}": v for k, v in per.items()})
    shapes.update({"lnf_g": (d,), "lnf_b": (d,), "W_U": (d, V)})
    return shapes


def init_params(cfg: ModelConfig) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(cfg.seed)
    resid_scale = 0.02 / np.sqrt(2 * cfg.n_layers)
    params = {}
    for name, shape in param_shapes(cfg).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf.endswith("_g"):
            arr = np.ones(shape)
        elif leaf.startswith("b") or leaf.endswith("_b"):
            arr = np.zeros(shape)
        elif leaf in ("W_O", "W_out"):
            arr = rng.normal(0.0, resid_scale, shape)
        else:
            arr = rng.normal(0.0, 0.02, shape)
        params[name] = arr.astype(np.float32)
    return params


@dataclass
class ModelBundle:
    config: ModelConfig
    params: dict
    tokenizer: Tokenizer
    metadata: dict = field(default_factory=dict)

    def layer(self, l: int, name: str) -> np.ndarray:
        return self.params[f"blocks.{l}.{name}"]

    def encode(self, text: str) -> list[int]:
        return self.tokenizer.encode(text)


def project_head(model: ModelBundle, layer: int, head: int, z: np.ndarray) -> np.ndarray:
    """Map a head output (``[..., d_head]``) into residual space through its
    slice of ``W_O``. The output bias is not included."""
    dh = model.config.d_head
    w = model.layer(layer, "W_O")[head * dh:(head + 1) * dh]
    return np.asarray(z, dtype=np.float32) @ w


# --------------------------------------------------------------------------- forward


def _position_index(rule, start: int, t: int) -> np.ndarray | slice | None:
    if rule == "all":
        return slice(None)
    if rule == "last":
        return np.array([t - 1])
    idx = [p - start for p in rule if start <= p < start + t]
    return np.array(idx, dtype=np.int64) if idx else None


def _apply_residual_hooks(x: np.ndarray, layer: int, hooks: HookSet, start: int) -> np.ndarray:
    out = x
    for ra in hooks.residual_add:
        if layer not in ra.layers or ra.strength == 0.0:
            continue
        sel = _position_index(ra.positions, start, x.shape[1])
        if sel is None:
            continue
        if out is x:
            out = x.copy()
        h = out[:, sel]
        v = ra.vector(layer).astype(np.float32)
        n0 = None
        if ra.scale_by_norm or ra.renormalize:
            n0 = np.linalg.norm(h, axis=-1, keepdims=True)
        delta = np.float32(ra.strength) * v
        h_new = h + (delta * n0 if ra.scale_by_norm else delta)
        if ra.renormalize:
            n1 = np.linalg.norm(h_new, axis=-1, keepdims=True)
            h_new = h_new * (n0 / np.maximum(n1, 1e-30))
        out[:, sel] = h_new.astype(np.float32)
    return out


def _mlp(model: ModelBundle, l: int, x: np.ndarray) -> np.ndarray:
    m, _, _ = _accel.layernorm(x, model.layer(l, "ln2_g"), model.layer(l, "ln2_b"))
    hmid = _accel.relu(m @ model.layer(l, "W_in") + model.layer(l, "b_in"))
    return hmid @ model.layer(l, "W_out") + model.layer(l, "b_out")


def _block_output(model: ModelBundle, l: int, x: np.ndarray, attn: np.ndarray) -> np.ndarray:
    """Residual after block ``l`` given its input ``x`` and attention output."""
    if model.config.parallel_blocks:
        return x + attn + _mlp(model, l, x)
    x = x + attn
    return x + _mlp(model, l, x)


def _run(
    model: ModelBundle,
    tokens: np.ndarray,
    hooks: HookSet,
    start: int = 0,
    kv_cache: list | None = None,
    capture: bool = False,
):
    """Process ``tokens[B, T]`` at absolute positions ``start..start+T-1``.

    When ``kv_cache`` is a list it is extended in place with this call's keys
    and values (one ``(K, V)`` pair per layer, shapes ``[B, H, S, d_head]``).
    """
    cfg = model.config
    p = model.params
    B, T = tokens.shape
    H, dh = cfg.n_heads, cfg.d_head
    scale = np.float32(1.0 / np.sqrt(dh))
    x = p["W_E"][tokens] + p["W_P"][start:start + T][None]
    resid, resid_pre, heads = [], [], []
    for l in range(cfg.n_layers):
        if capture:
            resid_pre.append(x)
        x = _apply_residual_hooks(x, l, hooks, start)
        if capture:
            resid.append(x)
        a, _, _ = _accel.layernorm(x, model.layer(l, "ln1_g"), model.layer(l, "ln1_b"))
        q = (a @ model.layer(l, "W_Q")).reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        k = (a @ model.layer(l, "W_K")).reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        v = (a @ model.layer(l, "W_V")).reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        if kv_cache is not None:
            if len(kv_cache) > l:
                k = np.concatenate([kv_cache[l][0], k], axis=2)
                v = np.concatenate([kv_cache[l][1], v], axis=2)
                kv_cache[l] = (k, v)
            else:
                kv_cache.append((k, v))
        offset = k.shape[2] - T
        probs = _accel.causal_softmax((q @ k.transpose(0, 1, 3, 2)) * scale, offset)
        z = probs @ v
        subs = [hs for hs in hooks.head_substitute if hs.layer == l]
        if subs:
            z = z.copy()
            for hs in subs:
                pos = hs.position if hs.position >= 0 else start + T + hs.position
                if start <= pos < start + T:
                    z[:, hs.head, pos - start] = np.asarray(hs.value, dtype=np.float32)
        if capture:
            heads.append(z)
        attn = z.transpose(0, 2, 1, 3).reshape(B, T, H * dh) @ model.layer(l, "W_O") + model.layer(l, "b_O")
        x = _block_output(model, l, x, attn)
    xf, _, _ = _accel.layernorm(x, p["lnf_g"], p["lnf_b"])
    logits = xf @ p["W_U"]
    if not capture:
        return logits, None
    return logits, (np.stack(resid), np.stack(resid_pre), np.stack(heads))


def _as_batch(tokens) -> tuple[np.ndarray, bool]:
    arr = np.asarray(tokens, dtype=np.int64)
    if arr.ndim == 1:
        return arr[None], True
    if arr.ndim != 2:
        raise InputError("tokens must be a 1-D sequence or a 2-D batch")
    return arr, False


def forward(model: ModelBundle, tokens, hooks: HookSet = EMPTY) -> tuple[np.ndarray, ActivationTrace]:
    """Full forward pass. Returns next-token logits for every position.

    ``tokens`` may be a single sequence or an equal-length batch; outputs
    keep the same leading shape. Captured tensors are populated according to
    ``hooks.capture_residual`` / ``hooks.capture_heads``.
    """
    cfg = model.config
    batch, single = _as_batch(tokens)
    if batch.shape[1] == 0:
        raise InputError("tokens must be non-empty")
    if batch.shape[1] > cfg.max_seq_len:
        raise InputError(f"sequence length {batch.shape[1]} exceeds max_seq_len {cfg.max_seq_len}")
    hooks.validate(cfg.n_layers, cfg.n_heads, cfg.d_model, cfg.d_head)
    capture = hooks.capture_residual or hooks.capture_heads
    logits, cap = _run(model, batch, hooks, capture=capture)
    trace = ActivationTrace(logits=logits[0] if single else logits)
    if cap is not None:
        resid, resid_pre, heads = cap
        if single:
            resid, resid_pre, heads = resid[:, 0], resid_pre[:, 0], heads[:, 0]
        if hooks.capture_residual:
            trace.residual, trace.residual_pre = resid, resid_pre
        if hooks.capture_heads:
            trace.head_out = heads
    return trace.logits, trace


# --------------------------------------------------------------------------- decoding


def generate_batch(
    model: ModelBundle,
    prompts: Sequence[Sequence[int]],
    max_new: int,
    hooks: HookSet = EMPTY,
    stop_token: int | None = None,
) -> list[list[int]]:
    """Greedy decoding for equal-length prompts; returns only new tokens.

    Key/value caching means each position's activations, including any
    residual hook applied when it was processed, are computed once and then
    reused; residual rules are evaluated at every step against the current
    sequence, so ``"all"`` covers generated tokens and ``"last"`` hits each
    newly processed token.
    """
    cfg = model.config
    if max_new < 1:
        raise InputError("max_new must be >= 1")
    batch, _ = _as_batch(prompts)
    if batch.shape[1] == 0:
        raise InputError("prompt must be non-empty")
    if batch.shape[1] > cfg.max_seq_len:
        raise InputError(f"prompt length {batch.shape[1]} exceeds max_seq_len {cfg.max_seq_len}")
    hooks.validate(cfg.n_layers, cfg.n_heads, cfg.d_model, cfg.d_head)
    n_new = min(max_new, cfg.max_seq_len - batch.shape[1] + 1)
    cache: list = []
    logits, _ = _run(model, batch, hooks, 0, cache)
    nxt = logits[:, -1].argmax(-1)
    out = [nxt]
    pos = batch.shape[1]
    for _ in range(n_new - 1):
        if stop_token is not None and all((np.stack(out) == stop_token).any(0)):
            break
        logits, _ = _run(model, nxt[:, None], hooks, pos, cache)
        nxt = logits[:, -1].argmax(-1)
        out.append(nxt)
        pos += 1
    gen = np.stack(out, axis=1)
    result = []
    for row in gen.tolist():
        if stop_token is not None and stop_token in row:
            row = row[: row.index(stop_token)]
        result.append(row)
    return result


def generate(
    model: ModelBundle,
    prompt_tokens: Sequence[int],
    max_new: int,
    hooks: HookSet = EMPTY,
    stop_token: int | None = None,
) -> list[int]:
    """Greedy decoding of a single prompt; returns prompt plus continuation."""
    prompt = list(prompt_tokens)
    return prompt + generate_batch(model, [prompt], max_new, hooks, stop_token)[0]


def resume_suffix(
    model: ModelBundle,
    x: np.ndarray,
    layer: int,
    kv_prefix: list,
    patch_heads: np.ndarray | None = None,
    patch_values: np.ndarray | None = None,
) -> np.ndarray:
    """Re-run the last ``S`` positions of a sequence from block ``layer`` onward.

    ``x[B, S, d_model]`` is the residual entering block ``layer`` at those
    positions. ``kv_prefix[l]`` holds ``(K, V)`` of shape ``[1, H, P, d_head]``
    for the ``P`` earlier positions, which nothing done later can affect.
    Row ``b`` optionally has head ``patch_heads[b]`` of block ``layer``
    replaced by ``patch_values[b]`` at the first re-run position only; the
    later positions see that change through attention. Returns logits
    ``[B, S, vocab]``.
    """
    cfg = model.config
    H, dh = cfg.n_heads, cfg.d_head
    h = np.asarray(x, dtype=np.float32)
    B, S = h.shape[:2]
    scale = np.float32(1.0 / np.sqrt(dh))
    rows = np.arange(B)
    for l in range(layer, cfg.n_layers):
        a, _, _ = _accel.layernorm(h, model.layer(l, "ln1_g"), model.layer(l, "ln1_b"))
        q = (a @ model.layer(l, "W_Q")).reshape(B, S, H, dh).transpose(0, 2, 1, 3)
        k = (a @ model.layer(l, "W_K")).reshape(B, S, H, dh).transpose(0, 2, 1, 3)
        v = (a @ model.layer(l, "W_V")).reshape(B, S, H, dh).transpose(0, 2, 1, 3)
        kp, vp = kv_prefix[l]
        P = kp.shape[2]
        k = np.concatenate([np.broadcast_to(kp, (B, H, P, dh)), k], axis=2)
        v = np.concatenate([np.broadcast_to(vp, (B, H, P, dh)), v], axis=2)
        probs = _accel.causal_softmax((q @ k.transpose(0, 1, 3, 2)) * scale, P)
        z = probs @ v
        if l == layer and patch_heads is not None:
            z = z.copy()
            z[rows, patch_heads, 0] = np.asarray(patch_values, dtype=np.float32)
        attn = z.transpose(0, 2, 1, 3).reshape(B, S, H * dh) @ model.layer(l, "W_O") + model.layer(l, "b_O")
        h = _block_output(model, l, h, attn)
    xf, _, _ = _accel.layernorm(h, model.params["lnf_g"], model.params["lnf_b"])
    return xf @ model.params["W_U"]


def forward_with_cache(model: ModelBundle, tokens: Sequence[int]):
    """Single-sequence forward returning ``(logits[T, V], residual[L, T, d],
    heads[L, H, T, d_head], kv)`` where ``kv[l] = (K, V)`` with shape
    ``[1, H, T, d_head]``."""
    batch, _ = _as_batch(tokens)
    if batch.shape[0] != 1:
        raise InputError("forward_with_cache takes a single sequence")
    if not 0 < batch.shape[1] <= model.config.max_seq_len:
        raise InputError(f"sequence length {batch.shape[1]} outside [1, {model.config.max_seq_len}]")
    cache: list = []
    logits, (resid, _, heads) = _run(model, batch, EMPTY, 0, cache, capture=True)
    return logits[0], resid[:, 0], heads[:, 0], cache
