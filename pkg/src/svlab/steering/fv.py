"""Function vectors: mean head activations, causal mediation scores, top-k selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core.hooks import HookSet, ResidualAdd
from ..core.model import ModelBundle, forward, forward_with_cache, project_head, resume_suffix
from ..errors import ConfigurationError, InputError
from ..tasks.datasets import TaskSpec
from ..tasks.prompts import build_few_shot, shuffle_labels
from .vectors import FunctionVector, HeadScore

N_MEAN_PROMPTS = 100
N_MEAN_SHOTS = 10
N_AIE_PROMPTS = 25
REFERENCE_HEADS = 1024
REFERENCE_K = 20

CAPTURE_HEADS = HookSet(capture_heads=True)


def default_k(total_heads: int) -> int:
    """Same head fraction as 20 of 1024 heads, never fewer than 2."""
    return max(2, int(round(total_heads * REFERENCE_K / REFERENCE_HEADS)))


def default_fv_layer(n_layers: int) -> int:
    return int(round(n_layers / 3))


def answer_target(model: ModelBundle, task: TaskSpec, query: str, answer: str) -> tuple:
    """Answer tokens whose joint probability is scored after ``"A:"``.

    The span runs up to and including the first token that is not a copy of
    the query token at the same position. For functional pairs that is the
    first answer token; behavioral rewrites that begin by copying the input
    are scored on the copied prefix plus the first changed word.
    """
    tok = model.tokenizer
    out = tok.encode(answer)
    src = tok.encode(query)
    for i, t in enumerate(out):
        if i >= len(src) or src[i] != t:
            return tuple(out[: i + 1])
    raise ConfigurationError(f"task {task.name!r} pair {query!r} -> {answer!r} has no token that differs from the input")


def _sample_demo_sets(task: TaskSpec, n_prompts: int, n_shots: int, seed: int, split: str):
    pool = task.split(split)
    if len(pool) < n_shots + 1:
        raise InputError(f"task {task.name!r} {split} split has {len(pool)} pairs, need {n_shots + 1}")
    rng = np.random.default_rng(seed)
    for _ in range(n_prompts):
        idx = rng.choice(len(pool), size=n_shots + 1, replace=False)
        yield [pool[int(i)] for i in idx[:-1]], pool[int(idx[-1])], rng


def _encode_checked(model: ModelBundle, text: str) -> list:
    ids = model.tokenizer.encode(text)
    if len(ids) > model.config.max_seq_len:
        raise InputError(
            f"prompt has {len(ids)} tokens, more than max_seq_len {model.config.max_seq_len}; use fewer shots"
        )
    return ids


def mean_head_activations(
    model: ModelBundle,
    task: TaskSpec,
    n_prompts: int = N_MEAN_PROMPTS,
    n_shots: int = N_MEAN_SHOTS,
    seed: int = 0,
    split: str = "train",
) -> np.ndarray:
    """Task-conditioned mean of each head's final-token output, ``[L, H, d_head]``.

    Every prompt is an informative ``n_shots`` prompt over distinct pairs of
    ``split``. Accumulation is float64 in prompt order.
    """
    if n_prompts < 1 or n_shots < 1:
        raise InputError("n_prompts and n_shots must be >= 1")
    seqs = [
        _encode_checked(model, build_few_shot(demos, q))
        for demos, (q, _), _ in _sample_demo_sets(task, n_prompts, n_shots, seed, split)
    ]
    cfg = model.config
    acts = np.empty((len(seqs), cfg.n_layers, cfg.n_heads, cfg.d_head), dtype=np.float32)
    by_len: dict = {}
    for i, s in enumerate(seqs):
        by_len.setdefault(len(s), []).append(i)
    for length in sorted(by_len):
        ids = by_len[length]
        _, trace = forward(model, np.array([seqs[i] for i in ids]), CAPTURE_HEADS)
        acts[ids] = trace.head_out[:, :, :, -1].transpose(1, 0, 2, 3)
    total = np.zeros(acts.shape[1:], dtype=np.float64)
    for a in acts:
        total += a
    return (total / len(seqs)).astype(np.float32)


@dataclass(frozen=True)
class CorruptedPrompt:
    """Prompt tokens (ending in ``"A:"``) and the answer span to score."""

    tokens: tuple
    target: tuple

    def __post_init__(self):
        if not self.tokens or not self.target:
            raise InputError("corrupted prompt needs tokens and a non-empty target")


def corrupted_prompts(
    model: ModelBundle,
    task: TaskSpec,
    n_prompts: int = N_AIE_PROMPTS,
    n_shots: int = N_MEAN_SHOTS,
    seed: int = 1,
    split: str = "train",
) -> list:
    """Shuffled-label prompts and the answer span of each correct answer."""
    out = []
    for demos, (q, a), rng in _sample_demo_sets(task, n_prompts, n_shots, seed, split):
        target = answer_target(model, task, q, a)
        ids = _encode_checked(model, build_few_shot(shuffle_labels(demos, rng), q))
        if len(ids) + len(target) - 1 > model.config.max_seq_len:
            raise InputError("corrupted prompt plus answer exceeds max_seq_len")
        out.append(CorruptedPrompt(tuple(ids), tuple(int(t) for t in target)))
    return out


def span_probability(logits: np.ndarray, target: Sequence[int]) -> np.ndarray:
    """Joint probability of ``target`` from teacher-forced logits ``[..., len(target), V]``."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(-1, keepdims=True))
    idx = np.arange(len(target))
    return np.exp(logp[..., idx, list(target)].sum(-1))


def compute_aie(
    model: ModelBundle,
    task: TaskSpec,
    means: np.ndarray,
    n_prompts: int = N_AIE_PROMPTS,
    n_shots: int = N_MEAN_SHOTS,
    seed: int = 1,
    prompts: Sequence[CorruptedPrompt] | None = None,
) -> list:
    """Average indirect effect of every head, ``L * H`` scores in (layer, head) order.

    For each corrupted prompt and head, the head's output at the final
    prompt token is replaced by ``means[layer, head]`` and the gain in the
    probability of the correct answer span is recorded. ``means`` may also
    be per-prompt, ``[n_prompts, L, H, d_head]``. Only the final prompt
    position and the teacher-forced answer positions are recomputed; earlier
    positions reuse the unpatched run's keys and values.
    """
    cfg = model.config
    if prompts is None:
        prompts = corrupted_prompts(model, task, n_prompts, n_shots, seed)
    if not prompts:
        raise InputError("no prompts to score")
    means = np.asarray(means, dtype=np.float32)
    per_prompt = means.ndim == 4
    shape = (cfg.n_layers, cfg.n_heads, cfg.d_head)
    if means.shape[-3:] != shape or (per_prompt and means.shape[0] != len(prompts)):
        raise InputError(f"means have shape {means.shape}, expected {shape} or [n_prompts, *{shape}]")
    H = cfg.n_heads
    heads = np.arange(H)
    total = np.zeros((cfg.n_layers, H), dtype=np.float64)
    for i, p in enumerate(prompts):
        # Teacher-force the answer span; position n-1 is the final prompt token.
        seq = list(p.tokens) + list(p.target[:-1])
        n, S = len(p.tokens), len(p.target)
        logits, resid, _, kv = forward_with_cache(model, seq)
        base = span_probability(logits[n - 1:], p.target)
        prefix = [(k[:, :, : n - 1], v[:, :, : n - 1]) for k, v in kv]
        m = means[i] if per_prompt else means
        for l in range(cfg.n_layers):
            x = np.broadcast_to(resid[l, n - 1:], (H, S, cfg.d_model))
            patched = resume_suffix(model, x, l, prefix, heads, m[l])
            total[l] += span_probability(patched, p.target) - base
    total /= len(prompts)
    return [HeadScore(l, h, float(total[l, h])) for l in range(cfg.n_layers) for h in range(H)]


def average_scores(score_lists: Sequence[Sequence[HeadScore]]) -> list:
    """Per-head mean AIE across tasks, for cross-task head selection."""
    if not score_lists:
        raise InputError("no score lists")
    acc: dict = {}
    for scores in score_lists:
        for s in scores:
            acc.setdefault((s.layer, s.head), []).append(s.aie)
    n = len(score_lists)
    if any(len(v) != n for v in acc.values()):
        raise InputError("score lists do not cover the same heads")
    return [HeadScore(l, h, float(np.mean(acc[(l, h)]))) for l, h in sorted(acc)]


def top_heads(scores: Sequence[HeadScore], k: int) -> list:
    """Top ``k`` scores; ties in AIE go to the lower (layer, head)."""
    if k <= 0:
        raise InputError("k must be positive")
    if k > len(scores):
        raise InputError(f"k={k} exceeds the {len(scores)} scored heads")
    return sorted(scores, key=lambda s: (-s.aie, s.layer, s.head))[:k]


def function_vector_from_heads(model: ModelBundle, means: np.ndarray, head_set) -> np.ndarray:
    """Sum of the listed heads' means projected into residual space (float64 sum)."""
    total = np.zeros(model.config.d_model, dtype=np.float64)
    for l, h in head_set:
        total += project_head(model, l, h, means[l, h])
    return total.astype(np.float32)


def build_fv(
    model: ModelBundle,
    means: np.ndarray,
    scores: Sequence[HeadScore],
    k: int | None = None,
    target_layers: Sequence[int] | None = None,
    source_task: str = "",
) -> FunctionVector:
    cfg = model.config
    if len(scores) != cfg.n_layers * cfg.n_heads:
        raise InputError(f"expected {cfg.n_layers * cfg.n_heads} head scores, got {len(scores)}")
    k = default_k(cfg.total_heads) if k is None else k
    chosen = top_heads(scores, k)
    head_set = tuple((s.layer, s.head) for s in chosen)
    layers = (default_fv_layer(cfg.n_layers),) if target_layers is None else tuple(int(l) for l in target_layers)
    return FunctionVector(
        vector=function_vector_from_heads(model, means, head_set),
        head_set=head_set,
        target_layers=layers,
        source_task=source_task,
        metadata={"k": k, "aie": [s.aie for s in chosen]},
    )


def make_fv_hooks(fv: FunctionVector, layer_override: Sequence[int] | None = None) -> HookSet:
    """Add the vector (strength 1) at the final position of each target layer."""
    layers = fv.target_layers if layer_override is None else tuple(int(l) for l in layer_override)
    if not layers:
        raise InputError("function vector needs at least one target layer")
    v = np.asarray(fv.vector, dtype=np.float32)
    ra = ResidualAdd(layers=layers, vectors={l: v for l in layers}, strength=1.0, positions="last")
    return HookSet(residual_add=(ra,))


def total_mean_cie(scores: Sequence[HeadScore], k: int) -> float:
    """Mean AIE of the top ``k`` heads."""
    return float(np.mean([s.aie for s in top_heads(scores, k)]))


def cie_summary(scores: Sequence[HeadScore], k: int) -> dict:
    top = [s.aie for s in top_heads(scores, k)]
    return {"k": k, "mean": float(np.mean(top)), "sum": float(np.sum(top))}
