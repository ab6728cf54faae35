"""Declarative, strictly validated run configuration.

A config file is JSON with a ``version`` field. Every section is optional
and falls back to the defaults below; unknown keys anywhere are rejected.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..errors import ConfigurationError
from ..tasks.datasets import BEHAVIORAL, FUNCTIONAL
from ..tasks.prompts import PromptStyle

CONFIG_VERSION = 1
DEFAULT_STRENGTHS = tuple(round(0.02 * i, 2) for i in range(1, 11))
DEFAULT_DEMO_COUNTS = (5, 10, 20)
LOCATION_NAMES = ("default", "middle-1", "middle-2", "middle-4", "all")


@dataclass
class ModelSection:
    n_layers: int = 4
    n_heads: int = 8
    d_model: int = 128
    d_head: int = 16
    d_mlp: int = 512
    max_seq_len: int = 128
    seed: int = 1
    parallel_blocks: bool = True


@dataclass
class TrainSection:
    steps: int = 1500
    lr: float = 3e-3
    batch_size: int = 24
    warmup: int = 100
    weight_decay: float = 0.01
    n_docs: int = 30_000
    curriculum_seed: int = 0
    shuffled_fraction: float = 0.15
    sentence_echo_fraction: float = 0.6
    model: ModelSection = field(default_factory=ModelSection)


@dataclass
class SweepGrid:
    strengths: tuple = DEFAULT_STRENGTHS
    demo_counts: tuple = DEFAULT_DEMO_COUNTS
    demo_style: dict = field(default_factory=lambda: {"functional": "style2", "behavioral": "behavioral_raw"})

    def validate(self) -> None:
        if not self.strengths or not self.demo_counts:
            raise ConfigurationError("sweep grid lists must be non-empty")
        if any(s < 0 for s in self.strengths):
            raise ConfigurationError("ICV strengths must be >= 0")
        if any(int(k) < 1 for k in self.demo_counts):
            raise ConfigurationError("demo counts must be >= 1")

    def style_for(self, task_name: str, category: str) -> str:
        return self.demo_style.get(task_name, self.demo_style.get(category, "style2"))


@dataclass
class ICVSection:
    grid: SweepGrid = field(default_factory=SweepGrid)
    renormalize: bool = True
    center: bool = False
    relative: bool = True
    sweep_split: str = "val"
    n_sweep: int = 40
    # used by ``extract-icv`` when no sweep has been run
    strength: float = 0.1
    n_demos: int = 10


@dataclass
class FVSection:
    k: int | None = None
    layer: int | None = None
    n_mean_prompts: int = 100
    n_shots: int = 10
    n_aie_prompts: int = 25
    behavioral_n_shots: int = 5
    cross_task_heads: bool = False


@dataclass
class MetricSection:
    ge_weights: tuple = (0.5, 0.5)
    ge_threshold: float = 2.0
    min_gradable: float = 0.6
    unsafe_threshold: float = 0.9
    lexicon_beta: float = 2.5


@dataclass
class AblationSpec:
    locations: tuple = LOCATION_NAMES
    applies_to: tuple = ("fv", "icv")

    def validate(self) -> None:
        bad = [l for l in self.locations if l not in LOCATION_NAMES]
        if bad or not self.locations:
            raise ConfigurationError(f"unknown ablation locations {bad}; known: {LOCATION_NAMES}")
        if not set(self.applies_to) <= {"fv", "icv"} or not self.applies_to:
            raise ConfigurationError("ablation applies_to must be a non-empty subset of {fv, icv}")


@dataclass
class RunConfig:
    version: int = CONFIG_VERSION
    model: str = ""
    tasks: tuple = FUNCTIONAL + BEHAVIORAL
    styles: tuple = ("zero_shot",)
    methods: tuple = ("baseline", "fv", "icv")
    n_eval: int = 100
    seeds: tuple = (0, 1, 2)
    eval_split: str = "test"
    max_new_tokens: int = 20
    chunk_size: int = 16
    seed: int = 0
    threads: int = 1
    out: str = "runs/default"
    vectors: dict = field(default_factory=dict)
    train: TrainSection = field(default_factory=TrainSection)
    icv: ICVSection = field(default_factory=ICVSection)
    fv: FVSection = field(default_factory=FVSection)
    metrics: MetricSection = field(default_factory=MetricSection)
    ablation: AblationSpec = field(default_factory=AblationSpec)

    def validate(self) -> "RunConfig":
        if self.version != CONFIG_VERSION:
            raise ConfigurationError(f"config version {self.version} is not supported (expected {CONFIG_VERSION})")
        known = FUNCTIONAL + BEHAVIORAL
        if not self.tasks or any(t not in known for t in self.tasks):
            raise ConfigurationError(f"tasks must be a non-empty subset of {known}")
        for s in self.styles:
            PromptStyle.parse(s)
        if not set(self.methods) <= {"baseline", "fv", "icv"}:
            raise ConfigurationError("methods must be drawn from baseline, fv, icv")
        if self.n_eval < 1 or not self.seeds or self.max_new_tokens < 1 or self.chunk_size < 1:
            raise ConfigurationError("n_eval, seeds, max_new_tokens and chunk_size must be positive")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        for split in (self.eval_split, self.icv.sweep_split):
            if split not in ("train", "val", "test"):
                raise ConfigurationError(f"unknown split {split!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        self.icv.grid.validate()
        self.ablation.validate()
        if self.fv.k is not None and self.fv.k < 1:
            raise ConfigurationError("fv.k must be >= 1")
        return self

    def to_dict(self) -> dict:
        return _to_jsonable(dataclasses.asdict(self))

    def hash(self) -> str:
        """Hash of the settings that determine results (not threads or paths)."""
        d = self.to_dict()
        for k in ("threads", "out"):
            d.pop(k, None)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _to_jsonable(x):
    if isinstance(x, dict):
        return {k: _to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_to_jsonable(v) for v in x]
    return x


def _build(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path or 'config'} must be a JSON object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        where = f" in {path}" if path else ""
        raise ConfigurationError(f"unknown config key(s){where}: {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        f = fields[name]
        default = f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default
        sub = f"{path}.{name}" if path else name
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, sub)
        elif isinstance(default, tuple):
            if not isinstance(value, list):
                raise ConfigurationError(f"{sub} must be a list")
            kwargs[name] = tuple(value)
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigurationError(f"{sub} must be true or false")
            kwargs[name] = value
        elif isinstance(default, (int, float)) and not isinstance(default, bool):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigurationError(f"{sub} must be a number")
            if isinstance(default, int) and not isinstance(value, int):
                raise ConfigurationError(f"{sub} must be an integer")
            kwargs[name] = value
        elif isinstance(default, str):
            if not isinstance(value, str):
                raise ConfigurationError(f"{sub} must be a string")
            kwargs[name] = value
        elif isinstance(default, dict):
            if not isinstance(value, dict):
                raise ConfigurationError(f"{sub} must be an object")
            kwargs[name] = dict(value)
        else:  # optional numbers (default None)
            if value is not None and (isinstance(value, bool) or not isinstance(value, int)):
                raise ConfigurationError(f"{sub} must be an integer or null")
            kwargs[name] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict) or "version" not in data:
        raise ConfigurationError("config must be a JSON object with a 'version' field")
    return _build(RunConfig, data, "").validate()


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(data)
