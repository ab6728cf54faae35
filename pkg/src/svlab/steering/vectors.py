"""Steering-vector value types."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InputError

DEMO_STYLES = ("style1", "style2", "behavioral_raw")


@dataclass(frozen=True)
class HeadScore:
    layer: int
    head: int
    aie: float

    def __post_init__(self):
        if not np.isfinite(self.aie):
            raise InputError(f"non-finite AIE for head ({self.layer}, {self.head})")


@dataclass(frozen=True)
class InContextVector:
    """Per-layer slices ``[L, d_model]`` of one unit direction plus strength λ.

    The slices concatenate (layer 0 first) to a vector of unit norm.
    """

    slices: np.ndarray
    strength: float = 0.0
    n_demos: int = 0
    demo_style: str = "style2"
    renormalize: bool = True
    source_task: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.strength < 0:
            raise InputError("ICV strength must be >= 0")
        if self.demo_style not in DEMO_STYLES:
            raise InputError(f"unknown demo style {self.demo_style!r}")
        if np.asarray(self.slices).ndim != 2:
            raise InputError("ICV slices must be [n_layers, d_model]")

    @property
    def kind(self) -> str:
        return "icv"

    @property
    def direction(self) -> np.ndarray:
        return np.asarray(self.slices).reshape(-1)

    def with_strength(self, strength: float) -> "InContextVector":
        return replace(self, strength=float(strength))


@dataclass(frozen=True)
class FunctionVector:
    """Residual-space vector formed from the top-k heads' projected means."""

    vector: np.ndarray
    head_set: tuple
    target_layers: tuple
    source_task: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.target_layers:
            raise InputError("function vector needs at least one target layer")
        if np.asarray(self.vector).ndim != 1:
            raise InputError("function vector must be 1-D")

    @property
    def kind(self) -> str:
        return "fv"

    @property
    def k(self) -> int:
        return len(self.head_set)

    def with_layers(self, layers) -> "FunctionVector":
        return replace(self, target_layers=tuple(int(l) for l in layers))
