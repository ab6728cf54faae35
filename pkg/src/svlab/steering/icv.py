"""In-context vectors from contrastive residual-stream differences."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..core.hooks import HookSet, ResidualAdd
from ..core.model import ModelBundle, forward
from ..errors import DegenerateInputError, InputError
from ..tasks.prompts import ContrastPair
from .linalg import PCA_MAX_ITER, PCA_TOL, mean_direction, principal_direction
from .vectors import InContextVector

CAPTURE_RESIDUAL = HookSet(capture_residual=True)


def _final_residuals(model: ModelBundle, seqs: list) -> np.ndarray:
    """Block-input residual at each sequence's last token: ``[n, L, d]``."""
    out = np.empty((len(seqs), model.config.n_layers, model.config.d_model), dtype=np.float32)
    by_len: dict = {}
    for i, s in enumerate(seqs):
        by_len.setdefault(len(s), []).append(i)
    for length in sorted(by_len):
        ids = by_len[length]
        _, trace = forward(model, np.array([seqs[i] for i in ids]), CAPTURE_RESIDUAL)
        out[ids] = trace.residual[:, :, -1].transpose(1, 0, 2)
    return out


def collect_differences(model: ModelBundle, pairs: Sequence[ContrastPair]) -> np.ndarray:
    """``[n_pairs, L * d_model]`` matrix of positive minus negative final-token
    residuals. Each row is the layer-0 block input followed by layer 1 and so on."""
    if len(pairs) < 1:
        raise InputError("need at least one contrast pair")
    tok = model.tokenizer
    limit = model.config.max_seq_len
    pos, neg = [], []
    for i, p in enumerate(pairs):
        a, b = tok.encode(p.positive), tok.encode(p.negative)
        for which, s in (("positive", a), ("negative", b)):
            if not 0 < len(s) <= limit:
                raise InputError(f"contrast pair #{i} {which} member has {len(s)} tokens (limit {limit}): {p!r}")
        pos.append(a)
        neg.append(b)
    diff = _final_residuals(model, pos) - _final_residuals(model, neg)
    return diff.reshape(len(pairs), -1)


def build_icv(
    model: ModelBundle,
    pairs: Sequence[ContrastPair],
    strength: float,
    renormalize: bool = True,
    *,
    center: bool = False,
    demo_style: str = "style2",
    source_task: str = "",
    seed: int = 0,
    tol: float = PCA_TOL,
    max_iter: int = PCA_MAX_ITER,
) -> InContextVector:
    diffs = collect_differences(model, pairs)
    method = "pca_centered" if center else "pca"
    try:
        direction = principal_direction(diffs, center=center, tol=tol, max_iter=max_iter, seed=seed)
    except DegenerateInputError:
        # Centering can cancel identical rows; the plain mean still carries
        # the shift. A zero mean re-raises.
        direction = mean_direction(diffs)
        method = "mean"
    L, d = model.config.n_layers, model.config.d_model
    meta = {"direction_method": method, "n_pairs": len(pairs), "pca_seed": seed, "pca_tol": tol}
    return InContextVector(
        slices=direction.reshape(L, d).astype(np.float32),
        strength=float(strength),
        n_demos=len(pairs),
        demo_style=demo_style,
        renormalize=renormalize,
        source_task=source_task,
        metadata=meta,
    )


def make_icv_hooks(icv: InContextVector, layers: Sequence[int] | None = None, relative: bool = True) -> HookSet:
    """Residual additions at every token position of every layer (or ``layers``).

    With ``relative`` (the default) each layer's slice is used as a unit
    direction and the step is ``λ·‖h‖`` long, i.e. λ is measured against the
    hidden state's own scale. Otherwise the literal slice is added,
    ``h + λ·v_l``. ``icv.renormalize`` then restores the pre-update norm.
    """
    slices = np.asarray(icv.slices, dtype=np.float32)
    chosen = range(slices.shape[0]) if layers is None else layers
    if layers is not None and not layers:
        raise InputError("layer override must be non-empty")
    vecs = {}
    for l in chosen:
        if not 0 <= l < slices.shape[0]:
            raise InputError(f"layer {l} out of range [0, {slices.shape[0]})")
        v = slices[l]
        if relative:
            n = float(np.linalg.norm(v))
            if n == 0.0:
                continue
            v = v / np.float32(n)
        vecs[int(l)] = v
    if not vecs or icv.strength == 0.0:
        return HookSet()
    ra = ResidualAdd(
        layers=tuple(sorted(vecs)),
        vectors=vecs,
        strength=float(icv.strength),
        positions="all",
        scale_by_norm=relative,
        renormalize=icv.renormalize,
    )
    return HookSet(residual_add=(ra,))
