"""Intervention descriptions consumed by :func:`svlab.core.model.forward`.

Hooks are plain data; the forward pass interprets them. Nothing here ever
touches model weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from ..errors import ConfigurationError

# "all" = every token position (including tokens produced later during
# generation), "last" = the final position of the sequence being processed,
# or an explicit tuple of absolute positions.
PositionRule = Union[str, tuple]


@dataclass(frozen=True)
class ResidualAdd:
    """Add ``strength * vectors[l]`` to the residual stream entering block ``l``.

    With ``scale_by_norm`` the added vector is additionally multiplied by the
    hidden state's own Euclidean norm, making ``strength`` a relative step.
    With ``renormalize`` the updated state is rescaled to its pre-update norm.
    """

    layers: tuple
    vectors: Mapping[int, np.ndarray]
    strength: float = 1.0
    positions: PositionRule = "all"
    scale_by_norm: bool = False
    renormalize: bool = False

    def vector(self, layer: int) -> np.ndarray:
        return self.vectors[layer]


@dataclass(frozen=True)
class HeadSubstitute:
    """Replace one head's output (before ``W_O``) at one token position.

    ``value`` has shape ``(d_head,)`` or ``(batch, d_head)``. Negative
    positions count from the end of the processed sequence.
    """

    layer: int
    head: int
    position: int
    value: np.ndarray


@dataclass(frozen=True)
class HookSet:
    residual_add: tuple = ()
    head_substitute: tuple = ()
    capture_residual: bool = False
    capture_heads: bool = False

    @property
    def is_empty(self) -> bool:
        return not self.residual_add and not self.head_substitute

    def with_capture(self, residual: bool = True, heads: bool = True) -> "HookSet":
        return HookSet(self.residual_add, self.head_substitute, residual, heads)

    def merged(self, other: "HookSet") -> "HookSet":
        return HookSet(
            self.residual_add + other.residual_add,
            self.head_substitute + other.head_substitute,
            self.capture_residual or other.capture_residual,
            self.capture_heads or other.capture_heads,
        )

    def validate(self, n_layers: int, n_heads: int, d_model: int, d_head: int) -> None:
        for ra in self.residual_add:
            if not ra.layers:
                raise ConfigurationError("residual_add with empty layer set")
            for l in ra.layers:
                if not 0 <= l < n_layers:
                    raise ConfigurationError(f"residual_add layer {l} out of range [0, {n_layers})")
                v = np.asarray(ra.vectors[l])
                if v.shape[-1] != d_model:
                    raise ConfigurationError(f"residual_add vector for layer {l} has size {v.shape[-1]}, need {d_model}")
            if not (ra.positions in ("all", "last") or isinstance(ra.positions, tuple)):
                raise ConfigurationError(f"bad position rule {ra.positions!r}")
        for hs in self.head_substitute:
            if not 0 <= hs.layer < n_layers:
                raise ConfigurationError(f"head_substitute layer {hs.layer} out of range [0, {n_layers})")
            if not 0 <= hs.head < n_heads:
                raise ConfigurationError(f"head_substitute head {hs.head} out of range [0, {n_heads})")
            if np.asarray(hs.value).shape[-1] != d_head:
                raise ConfigurationError(f"head_substitute value must have size {d_head}")


EMPTY = HookSet()


def residual_add(
    layers: Sequence[int],
    vectors: Mapping[int, np.ndarray] | np.ndarray,
    strength: float = 1.0,
    positions: PositionRule = "all",
    **kw,
) -> ResidualAdd:
    """Convenience constructor; a single array is broadcast to every layer."""
    layers = tuple(int(l) for l in layers)
    if isinstance(vectors, np.ndarray):
        vectors = {l: vectors for l in layers}
    vecs = {int(l): np.asarray(vectors[l], dtype=np.float32) for l in layers}
    return ResidualAdd(layers, vecs, float(strength), positions, **kw)


@dataclass
class ActivationTrace:
    """Captured activations of one forward call.

    ``residual`` is ``[layer, (batch,) token, d_model]`` taken at each block
    input after residual hooks and ``residual_pre`` the same site before
    them; ``head_out`` is ``[layer, (batch,) head, token, d_head]`` taken
    after head substitution.
    """

    logits: np.ndarray
    residual: np.ndarray | None = None
    residual_pre: np.ndarray | None = None
    head_out: np.ndarray | None = None
