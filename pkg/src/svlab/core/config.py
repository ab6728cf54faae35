from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from ..errors import ConfigurationError


@dataclass(frozen=True)
class ModelConfig:
    n_layers: int = 4
    n_heads: int = 8
    d_model: int = 128
    d_head: int = 16
    vocab_size: int = 0
    max_seq_len: int = 128
    seed: int = 0
    d_mlp: int = 512
    parallel_blocks: bool = True

    def __post_init__(self):
        for f in ("n_layers", "n_heads", "d_model", "d_head", "vocab_size", "max_seq_len", "d_mlp"):
            if getattr(self, f) <= 0:
                raise ConfigurationError(f"{f} must be positive, got {getattr(self, f)}")
        if self.n_heads * self.d_head != self.d_model:
            raise ConfigurationError(
                f"n_heads * d_head must equal d_model ({self.n_heads}*{self.d_head} != {self.d_model})"
            )
        if self.max_seq_len < 64:
            raise ConfigurationError(f"max_seq_len must be >= 64, got {self.max_seq_len}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must fit in an unsigned 64-bit integer")

    @property
    def total_heads(self) -> int:
        return self.n_layers * self.n_heads

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown ModelConfig keys: {sorted(unknown)}")
        return cls(**d)
